use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::analysis::{exit_trajectory, ExitModule};
use crate::engine::{run_coded, sise_uncoded};
use crate::signal::{
    apply_channel_with, bpsk_demap, bpsk_map, mismatch_perturb_with, random_bits, stream_rng, ChannelModel,
    Stream,
};
use crate::trellis::{rsc_encode, Interleaver};
use crate::Result;

const Z_95: f64 = 1.96;

/// Error count and bit count of one decision snapshot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ErrorCount {
    pub errors: usize,
    pub bits: usize,
}

impl ErrorCount {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }

    /// Normal-approximation 95% half-width of the BER.
    pub fn ci_half_width(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        let p = self.ber();
        Z_95 * (p * (1.0 - p) / self.bits as f64).sqrt()
    }

    /// 95% Wilson score interval; stays informative at zero errors.
    pub fn wilson_interval(&self) -> (f64, f64) {
        if self.bits == 0 {
            return (0.0, 1.0);
        }
        let n = self.bits as f64;
        let p = self.ber();
        let z2 = Z_95 * Z_95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        ((center - half).max(0.0), (center + half).min(1.0))
    }

    fn add(&mut self, other: ErrorCount) {
        self.errors += other.errors;
        self.bits += other.bits;
    }
}

/// Outcome of one packet: one count per iteration snapshot (decoding round for
/// coded runs, main-equalizer pass for uncoded runs).
#[derive(Clone, Debug, PartialEq)]
pub struct PacketOutcome {
    pub per_iteration: Vec<ErrorCount>,
}

impl PacketOutcome {
    pub fn final_count(&self) -> ErrorCount {
        self.per_iteration.last().copied().unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub n0: f64,
    pub packets: usize,
    pub per_iteration: Vec<ErrorCount>,
}

impl BerPoint {
    pub fn final_count(&self) -> ErrorCount {
        self.per_iteration.last().copied().unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerResult {
    pub label: String,
    pub points: Vec<BerPoint>,
}

struct PacketSetup {
    bits: Vec<u8>,
    r: crate::signal::ReceivedSequence,
    rx_taps: Vec<f64>,
    interleaver: Option<Interleaver>,
    codeword: Vec<u8>,
}

fn setup_packet(cfg: &ExperimentConfig, taps: &[f64], snr_db: f64, packet: u64) -> Result<PacketSetup> {
    let root = cfg.seeds.root;
    let n0 = cfg.noise_variance(snr_db);
    let ch = ChannelModel::new(taps.to_vec(), n0)?;
    let mut data = stream_rng(root, packet, Stream::Data);
    let (bits, codeword, interleaver, tx_bits) = if cfg.code.enabled {
        let msg = random_bits(cfg.code.message_bits, &mut data);
        let cw = rsc_encode(&msg);
        let il = Interleaver::random_with(cw.len(), &mut stream_rng(root, packet, Stream::Interleaver));
        let tx = il.interleave(&cw)?;
        (msg, cw, Some(il), tx)
    } else {
        let b = random_bits(cfg.sweep.symbols, &mut data);
        (b.clone(), Vec::new(), None, b)
    };
    let x = bpsk_map(&tx_bits);
    let r = apply_channel_with(&x, &ch, &mut stream_rng(root, packet, Stream::Noise));
    let rx_taps = if cfg.channel.mismatch {
        let snr = 10f64.powf(snr_db / 10.0);
        mismatch_perturb_with(&ch, snr, &mut stream_rng(root, packet, Stream::Mismatch))?
            .taps()
            .to_vec()
    } else {
        taps.to_vec()
    };
    Ok(PacketSetup {
        bits,
        r,
        rx_taps,
        interleaver,
        codeword,
    })
}

fn count(decisions: &[u8], truth: &[u8]) -> ErrorCount {
    ErrorCount {
        errors: decisions.iter().zip(truth).filter(|(a, b)| a != b).count(),
        bits: truth.len(),
    }
}

/// Simulates packet `packet` of the point at `snr_db`. Every random draw comes
/// from streams keyed by the root seed and packet index, so schemes that share
/// a seed see identical data, noise, interleavers and channel estimates.
pub fn simulate_packet(cfg: &ExperimentConfig, taps: &[f64], snr_db: f64, packet: u64) -> Result<PacketOutcome> {
    let p = setup_packet(cfg, taps, snr_db, packet)?;
    let n0 = cfg.noise_variance(snr_db);
    let sise = cfg.sise();
    let per_iteration = match &p.interleaver {
        Some(il) => {
            let res = run_coded(&p.r, &p.rx_taps, n0, il, &sise, cfg.code.outer_iterations)?;
            res.record.rounds.iter().map(|round| count(&round.decisions, &p.bits)).collect()
        }
        None => {
            let res = sise_uncoded(&p.r, &p.rx_taps, n0, &sise)?;
            res.pass_decisions.iter().map(|h| count(&bpsk_demap(h), &p.bits)).collect()
        }
    };
    Ok(PacketOutcome { per_iteration })
}

/// Runs one SNR point until the final-iteration error count reaches
/// `min_errors` or the packet budget is spent.
///
/// Packets are evaluated in parallel batches but accumulated strictly in packet
/// order, so the result does not depend on the thread count.
pub fn run_ber_point(cfg: &ExperimentConfig, snr_db: f64) -> Result<BerPoint> {
    let taps = cfg.taps()?;
    let budget = cfg.sweep.packets;
    let batch = (rayon::current_num_threads() * 2).max(1);
    let mut point = BerPoint {
        snr_db,
        n0: cfg.noise_variance(snr_db),
        packets: 0,
        per_iteration: Vec::new(),
    };
    let mut next = 0usize;
    'outer: while next < budget {
        let end = (next + batch).min(budget);
        let outcomes: Vec<Result<PacketOutcome>> = (next..end)
            .into_par_iter()
            .map(|k| simulate_packet(cfg, &taps, snr_db, k as u64))
            .collect();
        for o in outcomes {
            let o = o?;
            if point.per_iteration.len() < o.per_iteration.len() {
                point.per_iteration.resize(o.per_iteration.len(), ErrorCount::default());
            }
            for (acc, c) in point.per_iteration.iter_mut().zip(&o.per_iteration) {
                acc.add(*c);
            }
            point.packets += 1;
            if point.final_count().errors >= cfg.sweep.min_errors {
                break 'outer;
            }
        }
        next = end;
    }
    Ok(point)
}

pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<BerResult> {
    cfg.validate()?;
    let points = cfg
        .sweep
        .snr_db
        .iter()
        .map(|&s| run_ber_point(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(BerResult {
        label: cfg.label(),
        points,
    })
}

/// Block-averaged EXIT point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExitRow {
    pub snr_db: f64,
    pub iteration: usize,
    pub module: ExitModule,
    pub mi_in: f64,
    pub mi_out: f64,
}

/// Trajectory of one block at `snr_db`.
pub fn exit_block(
    cfg: &ExperimentConfig,
    taps: &[f64],
    snr_db: f64,
    block: u64,
) -> Result<Vec<crate::analysis::ExitPoint>> {
    let p = setup_packet(cfg, taps, snr_db, block)?;
    let il = p
        .interleaver
        .as_ref()
        .ok_or_else(|| crate::Error::config("code.enabled", "EXIT runs need the coded system"))?;
    let n0 = cfg.noise_variance(snr_db);
    let res = run_coded(&p.r, &p.rx_taps, n0, il, &cfg.sise(), cfg.code.outer_iterations)?;
    Ok(exit_trajectory(&res.record, &bpsk_map(&p.codeword)))
}

/// Averages EXIT trajectories over `sweep.exit_blocks` blocks per SNR point.
pub fn run_exit(cfg: &ExperimentConfig) -> Result<Vec<ExitRow>> {
    cfg.validate()?;
    if !cfg.code.enabled {
        return Err(crate::Error::config("code.enabled", "EXIT runs need the coded system"));
    }
    let taps = cfg.taps()?;
    let blocks = cfg.sweep.exit_blocks.max(1);
    let mut rows = Vec::new();
    for &snr_db in &cfg.sweep.snr_db {
        let trajectories = (0..blocks as u64)
            .into_par_iter()
            .map(|b| exit_block(cfg, &taps, snr_db, b))
            .collect::<Result<Vec<_>>>()?;
        let mut acc = trajectories[0].clone();
        for t in &trajectories[1..] {
            for (a, p) in acc.iter_mut().zip(t) {
                a.mi_in += p.mi_in;
                a.mi_out += p.mi_out;
            }
        }
        rows.extend(acc.into_iter().map(|p| ExitRow {
            snr_db,
            iteration: p.iteration,
            module: p.module,
            mi_in: p.mi_in / blocks as f64,
            mi_out: p.mi_out / blocks as f64,
        }));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_the_estimate() {
        let zero = ErrorCount { errors: 0, bits: 1_000_000 };
        let (lo, hi) = zero.wilson_interval();
        assert_eq!(lo, 0.0);
        assert!(hi > 3.0e-6 && hi < 4.0e-6, "{hi}");
        let c = ErrorCount { errors: 500, bits: 100_000 };
        let (lo, hi) = c.wilson_interval();
        assert!(lo < c.ber() && c.ber() < hi);
        assert!(((hi - lo) / 2.0 - c.ci_half_width()).abs() < 1e-5);
    }

    #[test]
    fn half_width_scales_with_bits() {
        let a = ErrorCount { errors: 100, bits: 100_000 };
        let b = ErrorCount { errors: 400, bits: 400_000 };
        assert!((a.ci_half_width() / b.ci_half_width() - 2.0).abs() < 1e-12);
        assert_eq!(ErrorCount::default().ber(), 0.0);
    }
}
