//! Bit and symbol sequences, ISI channel simulation, and the channel catalog.
//!
//! Symbols outside a packet are zero guards: they never contribute to the
//! noiseless channel output. The received sequence is guard-extended, i.e. it
//! carries the full linear convolution (`N + L_h` samples) so that every symbol
//! is observed through all of its channel taps and time reversal of a packet is
//! again a convolution with the reversed channel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Binary phase-shift keying: bit 0 maps to +1, bit 1 maps to -1.
pub fn bpsk_map(bits: &[u8]) -> Vec<f64> {
    bits.iter()
        .map(|&b| if b == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Inverse of [`bpsk_map`] on hard decisions; non-negative values decide bit 0.
pub fn bpsk_demap(symbols: &[f64]) -> Vec<u8> {
    symbols.iter().map(|&s| u8::from(s < 0.0)).collect()
}

/// Reverses the order of any sequence.
pub fn time_reverse<T: Clone>(s: &[T]) -> Vec<T> {
    s.iter().rev().cloned().collect()
}

/// Scales raw taps to unit energy.
pub fn normalize_channel(raw: &[f64]) -> Result<Vec<f64>> {
    let energy: f64 = raw.iter().map(|t| t * t).sum();
    if raw.is_empty() || energy == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let scale = energy.sqrt().recip();
    Ok(raw.iter().map(|t| t * scale).collect())
}

/// A real ISI channel `h_0..h_{L_h}` with additive white Gaussian noise of variance `N0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModel {
    taps: Vec<f64>,
    noise_variance: f64,
}

impl ChannelModel {
    /// Uses the taps as given (no normalization). Mismatched receiver models rely on this.
    pub fn new(taps: Vec<f64>, noise_variance: f64) -> Result<Self> {
        if taps.is_empty() || taps.iter().all(|&t| t == 0.0) {
            return Err(Error::ZeroChannel);
        }
        if !(noise_variance >= 0.0) {
            return Err(Error::config("noise_variance", "must be non-negative"));
        }
        Ok(Self {
            taps,
            noise_variance,
        })
    }

    /// Energy-normalizes `raw` first.
    pub fn normalized(raw: &[f64], noise_variance: f64) -> Result<Self> {
        Self::new(normalize_channel(raw)?, noise_variance)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Channel memory `L_h` (number of taps minus one).
    pub fn memory(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn with_noise_variance(&self, noise_variance: f64) -> Self {
        Self {
            taps: self.taps.clone(),
            noise_variance,
        }
    }

    pub fn with_taps(&self, taps: Vec<f64>) -> Self {
        Self {
            taps,
            noise_variance: self.noise_variance,
        }
    }

    /// The channel seen by a receiver that processes the packet back to front.
    pub fn reversed(&self) -> Self {
        Self {
            taps: time_reverse(&self.taps),
            noise_variance: self.noise_variance,
        }
    }

    /// Noiseless output `sum_k h_k x_{n-k}` at every index of the guard-extended packet.
    pub fn convolve(&self, x: &[f64]) -> Vec<f64> {
        if x.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0.0; x.len() + self.memory()];
        for (n, &xn) in x.iter().enumerate() {
            if xn == 0.0 {
                continue;
            }
            for (k, &h) in self.taps.iter().enumerate() {
                out[n + k] += h * xn;
            }
        }
        out
    }
}

/// Channel observations `r_n`, index-aligned with the transmitted symbols and
/// extended by `L_h` tail samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedSequence {
    samples: Vec<f64>,
    packet_len: usize,
}

impl ReceivedSequence {
    pub fn new(samples: Vec<f64>, packet_len: usize) -> Result<Self> {
        if samples.len() < packet_len {
            return Err(Error::LengthMismatch {
                expected: packet_len,
                actual: samples.len(),
            });
        }
        Ok(Self {
            samples,
            packet_len,
        })
    }

    /// All samples including the tail.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Samples `r_0..r_{N-1}` only.
    pub fn aligned(&self) -> &[f64] {
        &self.samples[..self.packet_len]
    }

    pub fn packet_len(&self) -> usize {
        self.packet_len
    }

    /// Sample at `i`, zero outside the observed range.
    #[inline]
    pub fn at(&self, i: isize) -> f64 {
        if i < 0 {
            0.0
        } else {
            self.samples.get(i as usize).copied().unwrap_or(0.0)
        }
    }

    /// Observations of the time-reversed packet through the time-reversed channel.
    pub fn reversed(&self) -> Self {
        Self {
            samples: time_reverse(&self.samples),
            packet_len: self.packet_len,
        }
    }
}

/// Passes `x` through the channel and adds seeded Gaussian noise of variance `N0`.
pub fn apply_channel(x: &[f64], ch: &ChannelModel, seed: u64) -> ReceivedSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    apply_channel_with(x, ch, &mut rng)
}

/// Same as [`apply_channel`] but draws noise from a caller-owned stream.
pub fn apply_channel_with<R: rand::Rng + ?Sized>(
    x: &[f64],
    ch: &ChannelModel,
    rng: &mut R,
) -> ReceivedSequence {
    let mut samples = ch.convolve(x);
    let sigma = ch.noise_variance().sqrt();
    if sigma > 0.0 {
        for s in samples.iter_mut() {
            let w: f64 = StandardNormal.sample(rng);
            *s += sigma * w;
        }
    }
    ReceivedSequence {
        samples,
        packet_len: x.len(),
    }
}

/// Receiver-side channel estimate `h_i (1 + 0.1 eps_i / sqrt(SNR))`, not re-normalized.
pub fn mismatch_perturb(ch: &ChannelModel, snr_linear: f64, seed: u64) -> Result<ChannelModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    mismatch_perturb_with(ch, snr_linear, &mut rng)
}

pub fn mismatch_perturb_with<R: rand::Rng + ?Sized>(
    ch: &ChannelModel,
    snr_linear: f64,
    rng: &mut R,
) -> Result<ChannelModel> {
    if !(snr_linear > 0.0) {
        return Err(Error::config("snr_linear", "must be positive"));
    }
    let spread = 0.1 / snr_linear.sqrt();
    let taps = ch
        .taps()
        .iter()
        .map(|&h| {
            let eps: f64 = StandardNormal.sample(rng);
            (1.0 + spread * eps) * h
        })
        .collect();
    Ok(ch.with_taps(taps))
}

/// Names of the cataloged channels.
pub const CHANNEL_NAMES: [&str; 4] = ["h1", "h2", "h3", "h4"];

/// Energy-normalized taps of a cataloged channel.
pub fn standard_channel(name: &str) -> Result<Vec<f64>> {
    let s2 = std::f64::consts::SQRT_2;
    let raw: Vec<f64> = match name {
        "h1" => vec![1.0, 2.0, 1.0],
        "h2" => vec![1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0],
        "h3" => vec![1.0, 2.0, 3.0, 4.0, 5.0, 4.0, 3.0, 2.0, 1.0],
        "h4" => {
            // (1 + D/sqrt2 + D^2)^3 (1 - D/sqrt2 + D^2)^2, scale sqrt(32/5061)
            let scale = (32.0f64 / 5061.0).sqrt();
            return Ok([
                1.0,
                1.0 / s2,
                4.0,
                3.0 / s2,
                29.0 / 4.0,
                17.0 / (4.0 * s2),
                29.0 / 4.0,
                3.0 / s2,
                4.0,
                1.0 / s2,
                1.0,
            ]
            .iter()
            .map(|t| t * scale)
            .collect());
        }
        other => return Err(Error::UnknownChannel(other.to_string())),
    };
    normalize_channel(&raw)
}

/// Independent random streams derived from one experiment seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Data = 1,
    Noise = 2,
    Interleaver = 3,
    Mismatch = 4,
}

/// Deterministic per-packet generator for one stream of an experiment.
///
/// Packets with the same `(root, packet, stream)` reproduce the same draws no
/// matter which scheme consumes them, which is what paired comparisons rely on.
pub fn stream_rng(root: u64, packet: u64, stream: Stream) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&root.to_le_bytes());
    seed[8..16].copy_from_slice(&packet.to_le_bytes());
    seed[16..24].copy_from_slice(&(stream as u64).to_le_bytes());
    seed[24..].copy_from_slice(b"sise-rng");
    ChaCha8Rng::from_seed(seed)
}

/// Uniform random message bits.
pub fn random_bits<R: rand::Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<u8> {
    (0..len).map(|_| u8::from(rng.random::<bool>())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn bpsk_mapping() {
        assert_eq!(bpsk_map(&[0, 1, 1]), vec![1.0, -1.0, -1.0]);
        assert_eq!(bpsk_map(&[0, 0, 0, 0]), vec![1.0; 4]);
        assert!(bpsk_map(&[]).is_empty());
        assert_eq!(bpsk_demap(&[1.0, -1.0, 0.0]), vec![0, 1, 0]);
    }

    #[test]
    fn normalization() {
        let s6 = 6f64.sqrt();
        let h = normalize_channel(&[1.0, 2.0, 1.0]).unwrap();
        assert!(close(&h, &[1.0 / s6, 2.0 / s6, 1.0 / s6], 1e-15));
        assert_eq!(normalize_channel(&[1.0]).unwrap(), vec![1.0]);
        assert!(close(&normalize_channel(&[3.0, 4.0]).unwrap(), &[0.6, 0.8], 1e-15));
        assert!(matches!(normalize_channel(&[0.0, 0.0]), Err(Error::ZeroChannel)));
        assert!(matches!(normalize_channel(&[]), Err(Error::ZeroChannel)));
    }

    #[test]
    fn noiseless_channel_output() {
        let ch = ChannelModel::new(vec![1.0], 0.0).unwrap();
        assert_eq!(apply_channel(&[1.0], &ch, 3).aligned(), &[1.0]);

        let ch = ChannelModel::normalized(&[1.0, 2.0, 1.0], 0.0).unwrap();
        let r = apply_channel(&[1.0, 1.0, -1.0], &ch, 9);
        let s6 = 6f64.sqrt();
        // hand convolution with zero guard: 1, 1+2, -1+2+1, then tail -2+1, -1
        assert!(close(r.aligned(), &[1.0 / s6, 3.0 / s6, 2.0 / s6], 1e-15));
        assert!(close(
            r.samples(),
            &[1.0 / s6, 3.0 / s6, 2.0 / s6, -1.0 / s6, -1.0 / s6],
            1e-15
        ));
    }

    #[test]
    fn noise_variance_matches() {
        let ch = ChannelModel::normalized(&[1.0, 2.0, 1.0], 0.3).unwrap();
        let x: Vec<f64> = (0..1_000_000).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let r = apply_channel(&x, &ch, 42);
        let clean = ch.convolve(&x);
        let n = clean.len() as f64;
        let diffs: Vec<f64> = r.samples().iter().zip(&clean).map(|(a, b)| a - b).collect();
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        assert!((var / 0.3 - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn seeded_determinism() {
        let ch = ChannelModel::normalized(&[1.0, 2.0, 1.0], 0.5).unwrap();
        let x = bpsk_map(&[0, 1, 1, 0, 1]);
        assert_eq!(apply_channel(&x, &ch, 7), apply_channel(&x, &ch, 7));
        assert_ne!(apply_channel(&x, &ch, 7), apply_channel(&x, &ch, 8));
    }

    #[test]
    fn reversal() {
        assert_eq!(time_reverse(&[1, 2, 3]), vec![3, 2, 1]);
        assert!(time_reverse::<i32>(&[]).is_empty());

        let ch = ChannelModel::normalized(&[1.0, 0.3, -0.5], 0.0).unwrap();
        let x = bpsk_map(&[0, 1, 1, 0, 0, 1]);
        let forward = apply_channel(&x, &ch, 1).reversed();
        let backward = apply_channel(&time_reverse(&x), &ch.reversed(), 1);
        assert!(close(forward.samples(), backward.samples(), 1e-15));
    }

    #[test]
    fn catalog() {
        for name in CHANNEL_NAMES {
            let h = standard_channel(name).unwrap();
            let e: f64 = h.iter().map(|t| t * t).sum();
            assert!((e - 1.0).abs() < 1e-12, "{name} energy {e}");
        }
        let s44 = 44f64.sqrt();
        let h2 = standard_channel("h2").unwrap();
        let want: Vec<f64> = [1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0].iter().map(|t| t / s44).collect();
        assert!(close(&h2, &want, 1e-15));
        let s85 = 85f64.sqrt();
        let h3 = standard_channel("h3").unwrap();
        let want: Vec<f64> = [1.0, 2.0, 3.0, 4.0, 5.0, 4.0, 3.0, 2.0, 1.0]
            .iter()
            .map(|t| t / s85)
            .collect();
        assert!(close(&h3, &want, 1e-15));
        assert!(matches!(standard_channel("h9"), Err(Error::UnknownChannel(_))));
    }

    #[test]
    fn h4_factorization() {
        fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
            let mut out = vec![0.0; a.len() + b.len() - 1];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut p = vec![1.0];
        for _ in 0..3 {
            p = poly_mul(&p, &[1.0, r, 1.0]);
        }
        for _ in 0..2 {
            p = poly_mul(&p, &[1.0, -r, 1.0]);
        }
        let scale = (32.0f64 / 5061.0).sqrt();
        let p: Vec<f64> = p.iter().map(|t| t * scale).collect();
        assert!(close(&p, &standard_channel("h4").unwrap(), 1e-10));
    }

    #[test]
    fn mismatch_model() {
        let h4 = ChannelModel::new(standard_channel("h4").unwrap(), 0.1).unwrap();
        assert_eq!(
            mismatch_perturb(&h4, 10.0, 5).unwrap(),
            mismatch_perturb(&h4, 10.0, 5).unwrap()
        );
        let far = mismatch_perturb(&h4, 1e16, 5).unwrap();
        assert!(close(far.taps(), h4.taps(), 1e-8));
        assert!(mismatch_perturb(&h4, 0.0, 5).is_err());

        // spread of the per-tap ratio over many draws
        let snr = 10.0;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let unit = ChannelModel::new(vec![1.0], 0.0).unwrap();
        let devs: Vec<f64> = (0..100_000)
            .map(|_| mismatch_perturb_with(&unit, snr, &mut rng).unwrap().taps()[0] - 1.0)
            .collect();
        let m = devs.iter().sum::<f64>() / devs.len() as f64;
        let sd = (devs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / devs.len() as f64).sqrt();
        let target = 0.1 / snr.sqrt();
        assert!((sd / target - 1.0).abs() < 0.02, "sd {sd} target {target}");
    }

    #[test]
    fn streams_are_independent_and_stable() {
        use rand::Rng;
        let a: u64 = stream_rng(1, 0, Stream::Noise).random();
        let b: u64 = stream_rng(1, 0, Stream::Noise).random();
        let c: u64 = stream_rng(1, 0, Stream::Data).random();
        let d: u64 = stream_rng(1, 1, Stream::Noise).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
