//! Bidirectional DFE: one DFE over the packet, one over its time reverse,
//! soft outputs merged by correlation-aware combining and hard decisions by
//! windowed arbitration.

use super::dfe::{dfe_equalize, DfeConfig};
use super::matrix::build_channel_matrix;
use super::EqualizedFrame;
use crate::signal::{time_reverse, ReceivedSequence};
use crate::soft::{combine_two_branch, CorrelationStats};
use crate::{Error, Result};

pub const DEFAULT_ARBITRATION_WINDOW: usize = 15;

#[derive(Clone, Debug)]
pub struct BidfeOutput {
    pub forward: EqualizedFrame,
    /// Backward pass, already restored to forward time order.
    pub backward: EqualizedFrame,
    /// `(L_f + L_b) / (1 + rho)`
    pub extrinsic: Vec<f64>,
    pub correlation: CorrelationStats,
    /// Arbitrated hard decisions.
    pub hard: Vec<f64>,
}

/// Runs both DFEs and merges them.
pub fn bidfe_equalize(
    r: &ReceivedSequence,
    taps: &[f64],
    cfg: &DfeConfig,
    apriori: &[f64],
    n0: f64,
    window: usize,
) -> Result<BidfeOutput> {
    let cm_f = build_channel_matrix(taps, 0, cfg.anticausal, Some(cfg.feedback))?;
    let rev_taps = time_reverse(taps);
    let cm_b = build_channel_matrix(&rev_taps, 0, cfg.anticausal, Some(cfg.feedback))?;
    let forward = dfe_equalize(r, &cm_f, cfg, apriori, n0)?;
    let backward = dfe_equalize(&r.reversed(), &cm_b, cfg, &time_reverse(apriori), n0)?.reversed();
    let (extrinsic, correlation) = combine_two_branch(&forward.extrinsic, &backward.extrinsic);
    let hard = arbitrate(&forward.hard, &backward.hard, r, taps, window)?;
    Ok(BidfeOutput {
        forward,
        backward,
        extrinsic,
        correlation,
        hard,
    })
}

fn reconstruction_errors(x: &[f64], r: &ReceivedSequence, taps: &[f64]) -> Vec<f64> {
    r.samples()
        .iter()
        .enumerate()
        .map(|(k, &rk)| {
            let s: f64 = taps
                .iter()
                .enumerate()
                .filter(|&(l, _)| l <= k && k - l < x.len())
                .map(|(l, &h)| h * x[k - l])
                .sum();
            (rk - s) * (rk - s)
        })
        .collect()
}

/// Picks, per symbol, the candidate whose reconstruction of `r` has the smaller
/// squared error in a window of `window` samples centred on the symbol.
/// Ties go to the forward candidate.
pub fn arbitrate(
    fwd: &[f64],
    bwd: &[f64],
    r: &ReceivedSequence,
    taps: &[f64],
    window: usize,
) -> Result<Vec<f64>> {
    if window % 2 == 0 {
        return Err(Error::InvalidSpan(format!("arbitration window must be odd, got {window}")));
    }
    if fwd.len() != bwd.len() {
        return Err(Error::LengthMismatch {
            expected: fwd.len(),
            actual: bwd.len(),
        });
    }
    if fwd == bwd {
        return Ok(fwd.to_vec());
    }
    let ef = prefix_sums(&reconstruction_errors(fwd, r, taps));
    let eb = prefix_sums(&reconstruction_errors(bwd, r, taps));
    let half = window / 2;
    let last = ef.len() - 1;
    Ok((0..fwd.len())
        .map(|n| {
            if fwd[n] == bwd[n] {
                return fwd[n];
            }
            let lo = n.saturating_sub(half).min(last);
            let hi = (n + half + 1).min(last);
            if ef[hi] - ef[lo] <= eb[hi] - eb[lo] {
                fwd[n]
            } else {
                bwd[n]
            }
        })
        .collect())
}

fn prefix_sums(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for &e in v {
        acc += e;
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::FilterMode;
    use super::*;
    use crate::signal::{apply_channel, bpsk_map, standard_channel, ChannelModel};

    fn cfg(feedback: usize) -> DfeConfig {
        DfeConfig { anticausal: 12, feedback, mode: FilterMode::Ti, error_aware: false }
    }

    #[test]
    fn noiseless_symmetric_channel() {
        let h = standard_channel("h1").unwrap();
        let ch = ChannelModel::new(h.clone(), 0.0).unwrap();
        let bits: Vec<u8> = (0..200).map(|i| ((i * 13 + 5) % 11 % 2) as u8).collect();
        let x = bpsk_map(&bits);
        let r = apply_channel(&x, &ch, 0);
        let out = bidfe_equalize(&r, &h, &cfg(2), &vec![0.0; x.len()], 1e-6, 15).unwrap();
        for n in 0..x.len() {
            assert_eq!(out.forward.extrinsic[n].signum(), x[n]);
            assert_eq!(out.backward.extrinsic[n].signum(), x[n]);
        }
        assert_eq!(out.hard, x);
    }

    #[test]
    fn palindromic_symmetry() {
        let h = standard_channel("h1").unwrap();
        // x palindromic and noise-free gives a palindromic observation
        let half: Vec<u8> = (0..40).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
        let mut bits = half.clone();
        bits.extend(half.iter().rev());
        let x = bpsk_map(&bits);
        let ch = ChannelModel::new(h.clone(), 0.0).unwrap();
        let r = apply_channel(&x, &ch, 0);
        let out = bidfe_equalize(&r, &h, &cfg(2), &vec![0.0; x.len()], 0.2, 15).unwrap();
        let rev = time_reverse(&out.forward.extrinsic);
        for (a, b) in rev.iter().zip(&out.backward.extrinsic) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn arbitration_prefers_correct_burst() {
        let h = standard_channel("h2").unwrap();
        let ch = ChannelModel::new(h.clone(), 0.0).unwrap();
        let bits: Vec<u8> = (0..120).map(|i| ((i * 31 + 7) % 13 % 2) as u8).collect();
        let x = bpsk_map(&bits);
        let r = apply_channel(&x, &ch, 0);
        let mut bad = x.clone();
        for v in &mut bad[50..56] {
            *v = -*v;
        }
        assert_eq!(arbitrate(&x, &bad, &r, &h, 15).unwrap(), x);
        assert_eq!(arbitrate(&bad, &x, &r, &h, 15).unwrap(), x);
        assert_eq!(arbitrate(&x, &x, &r, &h, 1).unwrap(), x);
        assert!(arbitrate(&x, &bad, &r, &h, 4).is_err());
    }
}
