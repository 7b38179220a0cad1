//! SISO decision-feedback equalizer whose extrinsic LLR accounts for the
//! possibility of wrong feedback decisions.


use super::le::residual_observation;
use super::matrix::{solve_spd, ChannelMatrix, Layout};
use super::{EqualizedFrame, ErrorStats, FilterMode};
use crate::signal::ReceivedSequence;
use crate::soft::{clip_llr, hard_decision, max_star, priors_from_llr, softplus, SymbolPriors};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DfeConfig {
    /// Feedforward span `L_f` (the filter has `1 + L_f` taps).
    pub anticausal: usize,
    /// Feedback span `L_d`.
    pub feedback: usize,
    pub mode: FilterMode,
    /// Use the two-hypothesis extrinsic; otherwise the plain Gaussian LLR.
    pub error_aware: bool,
}

#[derive(Clone, Debug)]
pub struct DfeFilter {
    /// Feedforward taps `c_0 .. c_{-L_f}`.
    pub c: Vec<f64>,
    /// Feedback taps ordered `d_{L_d} .. d_1`.
    pub d: Vec<f64>,
    pub beta: f64,
    /// `H2^T c`
    pub g: Vec<f64>,
    pub mode: FilterMode,
}

impl DfeFilter {
    /// Feedback tap applied to the decision `lag` symbols back.
    #[inline]
    pub fn feedback_tap(&self, lag: usize) -> f64 {
        self.d[self.d.len() - lag]
    }
}

/// Taps for future-symbol variances `a_plus` (entry 0, the current symbol, is forced to 1).
pub fn design_dfe_with_variances(
    cm: &ChannelMatrix,
    a_plus: &[f64],
    n0: f64,
    mode: FilterMode,
) -> Result<DfeFilter> {
    if !(n0 > 0.0) {
        return Err(Error::NonPositiveNoise(n0));
    }
    assert!(matches!(cm.layout(), Layout::Feedback { .. }));
    let mut a = a_plus.to_vec();
    a[0] = 1.0;
    let c = solve_spd(cm.covariance(cm.current_col(), &a, n0), cm.target())?;
    let d = cm.h1().tr_mul(&c);
    let g = cm.h2().tr_mul(&c);
    Ok(DfeFilter {
        beta: cm.target().dot(&c),
        c: c.as_slice().to_vec(),
        d: d.as_slice().to_vec(),
        g: g.as_slice().to_vec(),
        mode,
    })
}

/// Stage-constant taps from the averaged variance; `z_bar = 1` is the TI design.
pub fn design_dfe_qti(cm: &ChannelMatrix, z_bar: f64, n0: f64) -> Result<DfeFilter> {
    let len = cm.cols() - cm.current_col();
    let mode = if z_bar == 1.0 { FilterMode::Ti } else { FilterMode::Qti };
    design_dfe_with_variances(cm, &vec![z_bar; len], n0, mode)
}

/// Per-symbol taps at time `n`.
pub fn design_dfe_tv(cm: &ChannelMatrix, priors: &SymbolPriors, n: usize, n0: f64) -> Result<DfeFilter> {
    let len = cm.cols() - cm.current_col();
    let a: Vec<f64> = (0..len).map(|j| priors.variance_at((n + j) as isize)).collect();
    design_dfe_with_variances(cm, &a, n0, FilterMode::Tv)
}

/// Mean and non-zero probability of the feedback interference, treating the
/// past decisions as independently wrong with probabilities `p_by_lag`.
///
/// All three slices are indexed by lag minus one.
pub fn feedback_error_stats(taps_by_lag: &[f64], decisions_by_lag: &[f64], p_by_lag: &[f64]) -> ErrorStats {
    let mut all_right = 1.0;
    let mut mean = 0.0;
    for ((&d, &x), &p) in taps_by_lag.iter().zip(decisions_by_lag).zip(p_by_lag) {
        all_right *= 1.0 - p;
        mean += d * (-2.0 * x) * p;
    }
    ErrorStats {
        prob_nonzero: 1.0 - all_right,
        mean,
    }
}

/// Mixture of the no-error and with-error conditional extrinsic LLRs weighted by
/// `Pr(i_n = 0)` and `Pr(i_n != 0)`.
pub fn error_aware_llr(l_clean: f64, l_err: f64, p_err: f64) -> f64 {
    if p_err <= 0.0 {
        return l_clean;
    }
    let ln_p0 = (1.0 - p_err).ln();
    let ln_p1 = p_err.ln();
    let num = max_star(ln_p0 - softplus(-l_clean), ln_p1 - softplus(-l_err));
    let den = max_star(ln_p0 - softplus(l_clean), ln_p1 - softplus(l_err));
    num - den
}

/// Error-propagation-aware extrinsic LLR of one DFE output sample.
pub fn dfe_extrinsic_error_aware(y: f64, sigma2: f64, beta: f64, stats: ErrorStats) -> f64 {
    let l_clean = 2.0 * beta * y / sigma2;
    if stats.prob_nonzero <= 0.0 {
        return l_clean;
    }
    let phi = beta * (y - stats.mean / stats.prob_nonzero) / sigma2;
    let l_err = 2.0 * phi / (1.0 + phi.abs());
    error_aware_llr(l_clean, l_err, stats.prob_nonzero)
}

/// Runs the DFE left to right over the packet.
///
/// Past decisions are the signs of the posterior LLR (extrinsic plus a priori);
/// their error probabilities feed the interference statistics of later symbols.
pub fn dfe_equalize(
    r: &ReceivedSequence,
    cm: &ChannelMatrix,
    cfg: &DfeConfig,
    apriori: &[f64],
    n0: f64,
) -> Result<EqualizedFrame> {
    let priors = priors_from_llr(apriori);
    let resid = residual_observation(r, cm.taps(), &priors);
    let n_sym = priors.len();
    let fb = cfg.feedback;
    let fixed = match cfg.mode {
        FilterMode::Tv => None,
        FilterMode::Qti => Some(design_dfe_qti(cm, priors.avg_variance, n0)?),
        FilterMode::Ti => Some(design_dfe_qti(cm, 1.0, n0)?),
    };
    let mut frame = EqualizedFrame::with_capacity(n_sym);
    frame.error_stats = Vec::with_capacity(n_sym);
    let mut p_wrong = vec![0.0; n_sym];
    let mut taps = vec![0.0; fb];
    let mut decisions = vec![0.0; fb];
    let mut probs = vec![0.0; fb];
    for n in 0..n_sym {
        let tv;
        let f = match &fixed {
            Some(f) => f,
            None => {
                tv = design_dfe_tv(cm, &priors, n, n0)?;
                &tv
            }
        };
        let mut y: f64 = f
            .c
            .iter()
            .enumerate()
            .map(|(i, &c)| resid.get(n + i).map_or(0.0, |&v| c * v))
            .sum();
        y += f.beta * priors.mean[n];
        for lag in 1..=fb {
            let (d, xbar, xhat, p) = if lag <= n {
                let k = n - lag;
                (f.feedback_tap(lag), priors.mean[k], frame.hard[k], p_wrong[k])
            } else {
                (f.feedback_tap(lag), 0.0, 0.0, 0.0)
            };
            // resid removed x̄ of past symbols; replace it with the decision
            y += d * (xbar - xhat);
            taps[lag - 1] = d;
            decisions[lag - 1] = xhat;
            probs[lag - 1] = p;
        }
        let noise = n0 * f.c.iter().map(|c| c * c).sum::<f64>();
        let isi: f64 = f
            .g
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, g)| priors.variance_at((n + j) as isize) * g * g)
            .sum();
        let sigma2 = noise + isi;
        let stats = feedback_error_stats(&taps, &decisions, &probs);
        let le = if cfg.error_aware {
            dfe_extrinsic_error_aware(y, sigma2, f.beta, stats)
        } else {
            2.0 * f.beta * y / sigma2
        };
        let post = clip_llr(le + apriori[n]);
        frame.push(y, sigma2, f.beta);
        frame.extrinsic.push(le);
        frame.hard.push(hard_decision(post));
        frame.error_stats.push(stats);
        p_wrong[n] = 1.0 / (1.0 + post.abs().exp());
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::super::matrix::build_channel_matrix;
    use super::super::le::{design_le_qti, le_equalize};
    use super::*;
    use crate::signal::{apply_channel, bpsk_map, standard_channel, ChannelModel};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn memoryless_matches_le() {
        let cm = build_channel_matrix(&[1.0], 0, 0, Some(0)).unwrap();
        let f = design_dfe_qti(&cm, 1.0, 0.3).unwrap();
        assert!(f.d.is_empty());
        let le_cm = build_channel_matrix(&[1.0], 0, 0, None).unwrap();
        let le = design_le_qti(&le_cm, 1.0, 0.3).unwrap();
        assert_eq!(f.c, le.c);

        let ch = ChannelModel::new(vec![1.0], 0.3).unwrap();
        let x = bpsk_map(&[0, 1, 1, 0, 0, 1, 0]);
        let r = apply_channel(&x, &ch, 4);
        let la = vec![0.0; x.len()];
        let cfg = DfeConfig { anticausal: 0, feedback: 0, mode: FilterMode::Ti, error_aware: true };
        let dfe = dfe_equalize(&r, &cm, &cfg, &la, 0.3).unwrap();
        let lin = le_equalize(&r, &le, &le_cm, &crate::soft::priors_from_llr(&la), 0.3);
        assert_eq!(dfe.y, lin.y);
        assert_eq!(dfe.extrinsic, lin.extrinsic);
    }

    #[test]
    fn feedback_taps_are_h1_projection() {
        let h = standard_channel("h3").unwrap();
        let cm = build_channel_matrix(&h, 0, 20, Some(8)).unwrap();
        let f = design_dfe_qti(&cm, 0.37, 0.05).unwrap();
        let d = cm.h1().transpose() * DVector::from_vec(f.c.clone());
        assert!((d - DVector::from_vec(f.d.clone())).amax() < 1e-12);
        let mut a = vec![0.37; 21];
        a[0] = 1.0;
        let h2 = cm.h2();
        let m = &h2 * DMatrix::from_diagonal(&DVector::from_vec(a)) * h2.transpose()
            + DMatrix::identity(21, 21) * 0.05;
        assert!((m * DVector::from_vec(f.c.clone()) - cm.target()).amax() < 1e-10);
    }

    #[test]
    fn noiseless_decisions_are_exact() {
        let h = standard_channel("h2").unwrap();
        let ch = ChannelModel::new(h.clone(), 0.0).unwrap();
        let bits: Vec<u8> = (0..300).map(|i| ((i * 37 + 11) % 7 % 2) as u8).collect();
        let x = bpsk_map(&bits);
        let r = apply_channel(&x, &ch, 0);
        let cm = build_channel_matrix(&h, 0, 20, Some(6)).unwrap();
        let cfg = DfeConfig { anticausal: 20, feedback: 6, mode: FilterMode::Ti, error_aware: true };
        let fr = dfe_equalize(&r, &cm, &cfg, &vec![0.0; x.len()], 1e-8).unwrap();
        assert_eq!(fr.hard, x);
    }

    #[test]
    fn error_stats_match_enumeration() {
        let d = [0.7, -0.2, 0.45, 0.1, -0.33, 0.05];
        let x = [1.0, -1.0, -1.0, 1.0, 1.0, -1.0];
        let p = [0.1, 0.02, 0.3, 0.45, 0.0, 0.2];
        for ld in 0..=6 {
            let fast = feedback_error_stats(&d[..ld], &x[..ld], &p[..ld]);
            let (mut pr, mut mean) = (0.0, 0.0);
            for pattern in 0u32..(1 << ld) {
                let mut prob = 1.0;
                let mut i = 0.0;
                for j in 0..ld {
                    if pattern >> j & 1 == 1 {
                        prob *= p[j];
                        i += d[j] * (-2.0 * x[j]);
                    } else {
                        prob *= 1.0 - p[j];
                    }
                }
                if pattern != 0 {
                    pr += prob;
                }
                mean += prob * i;
            }
            assert!((fast.prob_nonzero - pr).abs() < 1e-12);
            assert!((fast.mean - mean).abs() < 1e-12);
        }
    }

    fn eq20_direct(l0: f64, l1: f64, p: f64) -> f64 {
        let e0 = l0.exp();
        let e1 = l1.exp();
        let num = e0 * (1.0 - p) / (1.0 + e0) + e1 * p / (1.0 + e1);
        let den = (1.0 - p) / (1.0 + e0) + p / (1.0 + e1);
        num.ln() - den.ln()
    }

    #[test]
    fn error_aware_limits() {
        let s = ErrorStats { prob_nonzero: 0.0, mean: 0.0 };
        assert_eq!(dfe_extrinsic_error_aware(1.3, 0.4, 0.8, s), 2.0 * 0.8 * 1.3 / 0.4);
        let s = ErrorStats { prob_nonzero: 1.0, mean: 0.5 };
        let phi = 0.8 * (1.3 - 0.5) / 0.4;
        let want = 2.0 * phi / (1.0 + phi);
        assert!((dfe_extrinsic_error_aware(1.3, 0.4, 0.8, s) - want).abs() < 1e-12);

        // beta = sigma2 = y = 1, Pr = 0.5, conditional mean 2: phi = -1
        let s = ErrorStats { prob_nonzero: 0.5, mean: 1.0 };
        let got = dfe_extrinsic_error_aware(1.0, 1.0, 1.0, s);
        assert!((got - eq20_direct(2.0, -1.0, 0.5)).abs() < 1e-12);
    }
}
