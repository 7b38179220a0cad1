//! SISO MMSE linear equalizer with time-varying, quasi-time-invariant and
//! time-invariant tap designs.

use nalgebra::DVector;

use super::matrix::{solve_spd, ChannelMatrix, Layout};
use super::{EqualizedFrame, FilterMode};
use crate::signal::ReceivedSequence;
use crate::soft::{hard_decision, SymbolPriors};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct LeFilter {
    pub c: Vec<f64>,
    /// `h^T c`
    pub beta: f64,
    /// `H^T c`, one entry per symbol column of the window.
    pub g: Vec<f64>,
    pub mode: FilterMode,
}

fn finish(cm: &ChannelMatrix, c: DVector<f64>, mode: FilterMode) -> LeFilter {
    let beta = cm.target().dot(&c);
    let g = cm.matrix().tr_mul(&c);
    LeFilter {
        c: c.as_slice().to_vec(),
        beta,
        g: g.as_slice().to_vec(),
        mode,
    }
}

fn check_noise(n0: f64) -> Result<()> {
    if n0 > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveNoise(n0))
    }
}

/// Taps for per-column symbol variances `a` (the current column is forced to 1).
pub fn design_le_with_variances(cm: &ChannelMatrix, a: &[f64], n0: f64, mode: FilterMode) -> Result<LeFilter> {
    check_noise(n0)?;
    assert!(matches!(cm.layout(), Layout::Linear { .. }));
    let mut a = a.to_vec();
    a[cm.current_col()] = 1.0;
    let c = solve_spd(cm.covariance(0, &a, n0), cm.target())?;
    Ok(finish(cm, c, mode))
}

/// Exact MMSE taps at time `n` from the per-symbol prior variances.
pub fn design_le_tv(cm: &ChannelMatrix, priors: &SymbolPriors, n: usize, n0: f64) -> Result<LeFilter> {
    let first = n as isize + cm.first_symbol_offset();
    let a: Vec<f64> = (0..cm.cols())
        .map(|j| priors.variance_at(first + j as isize))
        .collect();
    design_le_with_variances(cm, &a, n0, FilterMode::Tv)
}

/// Taps computed once per stage from the time-averaged variance; `z_bar = 1` gives the TI design.
pub fn design_le_qti(cm: &ChannelMatrix, z_bar: f64, n0: f64) -> Result<LeFilter> {
    let a = vec![z_bar; cm.cols()];
    let mode = if z_bar == 1.0 { FilterMode::Ti } else { FilterMode::Qti };
    design_le_with_variances(cm, &a, n0, mode)
}

/// Residual variance `c^T [H A' H^T + N0 I] c` at time `n`, where `A'` holds the
/// prior variances with the current symbol zeroed.
fn residual_variance(cm: &ChannelMatrix, f: &LeFilter, priors: &SymbolPriors, n: usize, n0: f64) -> f64 {
    let first = n as isize + cm.first_symbol_offset();
    let noise = n0 * f.c.iter().map(|c| c * c).sum::<f64>();
    let isi: f64 = f
        .g
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != cm.current_col())
        .map(|(j, g)| priors.variance_at(first + j as isize) * g * g)
        .sum();
    noise + isi
}

/// `r - rbar` over the guard-extended packet, with `rbar` built from every prior mean.
pub(crate) fn residual_observation(r: &ReceivedSequence, taps: &[f64], priors: &SymbolPriors) -> Vec<f64> {
    let mut e = r.samples().to_vec();
    for (k, &m) in priors.mean.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        for (l, &h) in taps.iter().enumerate() {
            if let Some(s) = e.get_mut(k + l) {
                *s -= h * m;
            }
        }
    }
    e
}

#[inline]
fn window_dot(resid: &[f64], start: isize, c: &[f64]) -> f64 {
    c.iter()
        .enumerate()
        .map(|(i, &ci)| {
            let idx = start + i as isize;
            if idx < 0 {
                0.0
            } else {
                resid.get(idx as usize).map_or(0.0, |&v| ci * v)
            }
        })
        .sum()
}

/// Runs a fixed (QTI/TI) filter over the packet.
///
/// `y_n = (r - rbar)^T c` with the current symbol's mean suppressed in `rbar`.
pub fn le_equalize(r: &ReceivedSequence, f: &LeFilter, cm: &ChannelMatrix, priors: &SymbolPriors, n0: f64) -> EqualizedFrame {
    let resid = residual_observation(r, cm.taps(), priors);
    let n_sym = priors.len();
    let mut frame = EqualizedFrame::with_capacity(n_sym);
    for n in 0..n_sym {
        let start = n as isize + cm.first_sample_offset();
        // add back the current symbol's mean, which resid already removed
        let y = window_dot(&resid, start, &f.c) + f.beta * priors.mean[n];
        let s2 = residual_variance(cm, f, priors, n, n0);
        frame.push(y, s2, f.beta);
    }
    frame.extrinsic = le_extrinsic(&frame);
    frame.hard = frame.y.iter().map(|&y| hard_decision(y)).collect();
    frame
}

/// Time-varying filter: taps are re-solved for every symbol.
pub fn le_equalize_tv(r: &ReceivedSequence, cm: &ChannelMatrix, priors: &SymbolPriors, n0: f64) -> Result<EqualizedFrame> {
    let resid = residual_observation(r, cm.taps(), priors);
    let n_sym = priors.len();
    let mut frame = EqualizedFrame::with_capacity(n_sym);
    for n in 0..n_sym {
        let f = design_le_tv(cm, priors, n, n0)?;
        let start = n as isize + cm.first_sample_offset();
        let y = window_dot(&resid, start, &f.c) + f.beta * priors.mean[n];
        let s2 = residual_variance(cm, &f, priors, n, n0);
        frame.push(y, s2, f.beta);
    }
    frame.extrinsic = le_extrinsic(&frame);
    frame.hard = frame.y.iter().map(|&y| hard_decision(y)).collect();
    Ok(frame)
}

/// Gaussian extrinsic LLR `2 beta y / sigma^2`.
pub fn le_extrinsic(frame: &EqualizedFrame) -> Vec<f64> {
    frame
        .y
        .iter()
        .zip(&frame.sigma2)
        .zip(&frame.beta)
        .map(|((&y, &s2), &b)| 2.0 * b * y / s2)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::matrix::build_channel_matrix;
    use super::*;
    use crate::signal::{apply_channel, bpsk_map, ChannelModel};
    use crate::soft::priors_from_llr;
    use nalgebra::DMatrix;

    #[test]
    fn scalar_wiener() {
        let cm = build_channel_matrix(&[1.0], 2, 2, None).unwrap();
        let f = design_le_qti(&cm, 1.0, 1.0).unwrap();
        assert_eq!(f.c.iter().filter(|&&c| c != 0.0).count(), 1);
        assert!((f.c[2] - 0.5).abs() < 1e-15);
        for z in [0.0, 0.3, 1.0] {
            let f = design_le_qti(&cm, z, 0.5).unwrap();
            assert!((f.c[2] - 1.0 / 1.5).abs() < 1e-15);
        }
        let p = priors_from_llr(&[0.3, -1.0, 0.0, 2.0, 5.0]);
        let f = design_le_tv(&cm, &p, 2, 1.0).unwrap();
        assert!((f.c[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn no_prior_designs_coincide() {
        let h = crate::signal::standard_channel("h2").unwrap();
        let cm = build_channel_matrix(&h, 13, 13, None).unwrap();
        let p = priors_from_llr(&[0.0; 64]);
        let tv = design_le_tv(&cm, &p, 30, 0.1).unwrap();
        let qti = design_le_qti(&cm, p.avg_variance, 0.1).unwrap();
        assert_eq!(tv.c, qti.c);
        assert_eq!(qti.mode, FilterMode::Ti);
    }

    #[test]
    fn tends_to_matched_filter() {
        let h = crate::signal::standard_channel("h2").unwrap();
        let cm = build_channel_matrix(&h, 13, 13, None).unwrap();
        let n0 = 0.1;
        let f = design_le_qti(&cm, 0.0, n0).unwrap();
        let want = cm.target() / (1.0 + n0);
        assert!((DVector::from_vec(f.c.clone()) - want).amax() < 1e-12);
    }

    #[test]
    fn normal_equations_hold() {
        let cm = build_channel_matrix(&[0.4, 0.8, -0.3, 0.2], 4, 5, None).unwrap();
        let llr: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let p = priors_from_llr(&llr);
        let f = design_le_tv(&cm, &p, 17, 0.05).unwrap();
        let first = 17 + cm.first_symbol_offset();
        let mut a: Vec<f64> = (0..cm.cols()).map(|j| p.variance_at(first + j as isize)).collect();
        a[cm.current_col()] = 1.0;
        let m = cm.matrix() * DMatrix::from_diagonal(&DVector::from_vec(a)) * cm.matrix().transpose()
            + DMatrix::identity(cm.rows(), cm.rows()) * 0.05;
        let res = m * DVector::from_vec(f.c.clone()) - cm.target();
        assert!(res.amax() < 1e-10);
        assert!((cm.target().dot(&DVector::from_vec(f.c)) - f.beta).abs() < 1e-12);
    }

    #[test]
    fn memoryless_noiseless_limit() {
        let ch = ChannelModel::new(vec![1.0], 0.0).unwrap();
        let x = bpsk_map(&[0, 1, 1, 0, 1]);
        let r = apply_channel(&x, &ch, 0);
        let cm = build_channel_matrix(&[1.0], 1, 1, None).unwrap();
        let p = priors_from_llr(&[0.0; 5]);
        let n0 = 1e-9;
        let f = design_le_qti(&cm, 1.0, n0).unwrap();
        let fr = le_equalize(&r, &f, &cm, &p, n0);
        for (y, xv) in fr.y.iter().zip(&x) {
            assert!((y - xv).abs() < 1e-8);
        }
        assert!(fr.sigma2.iter().all(|&s| s > 0.0 && s < 1e-8));
    }

    #[test]
    fn extrinsic_arithmetic() {
        let mut fr = EqualizedFrame::with_capacity(2);
        fr.push(0.0, 1.0, 0.7);
        fr.push(3.0, 2.0, 1.0);
        assert_eq!(le_extrinsic(&fr), vec![0.0, 3.0]);
    }
}
