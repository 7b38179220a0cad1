//! Asymptotic output-SNR limits of the filter-based equalizers, the
//! binary-input AWGN information rate and mutual-information bookkeeping for
//! EXIT trajectories.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::engine::IterationRecord;
use crate::mmse::{
    build_channel_matrix, design_dfe_qti, design_le_qti, dfe_equalize, DfeConfig, FilterMode,
};
use crate::signal::{apply_channel_with, bpsk_map, random_bits, stream_rng, time_reverse, ChannelModel, Stream};
use crate::soft::{clip_llr, softplus, LLR_CLIP};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum LimitKind {
    QtiLe,
    QtiDfe,
    TiLe,
    TiDfe,
    TiBidfe,
}

impl LimitKind {
    pub const ALL: [LimitKind; 5] = [
        LimitKind::QtiLe,
        LimitKind::QtiDfe,
        LimitKind::TiLe,
        LimitKind::TiDfe,
        LimitKind::TiBidfe,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            LimitKind::QtiLe => "QTI-LE",
            LimitKind::QtiDfe => "QTI-DFE",
            LimitKind::TiLe => "TI-LE",
            LimitKind::TiDfe => "TI-DFE",
            LimitKind::TiBidfe => "TI-BiDFE",
        }
    }
}

/// Filter spans used for the limit computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Spans {
    pub le_causal: usize,
    pub le_anticausal: usize,
    pub dfe_anticausal: usize,
    pub dfe_feedback: usize,
}

impl Spans {
    /// Spans used for the coded experiments on the cataloged channels, scaled for others.
    pub fn for_memory(memory: usize) -> Self {
        match memory {
            6 => Spans { le_causal: 13, le_anticausal: 13, dfe_anticausal: 20, dfe_feedback: 6 },
            8 => Spans { le_causal: 14, le_anticausal: 14, dfe_anticausal: 20, dfe_feedback: 8 },
            10 => Spans { le_causal: 15, le_anticausal: 15, dfe_anticausal: 20, dfe_feedback: 10 },
            m => Spans {
                le_causal: 2 * m + 3,
                le_anticausal: 2 * m + 3,
                dfe_anticausal: (3 * m).max(2 * m + 8),
                dfe_feedback: m,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SnrLimit {
    pub kind: LimitKind,
    /// Linear output SNR with perfect a priori information.
    pub value: f64,
    /// `C_b(value)`
    pub mi_ceiling: f64,
}

fn wiener(m: DMatrix<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
    m.cholesky().map(|c| c.solve(h)).ok_or(Error::Singular)
}

fn gain_over_noise(h: &DVector<f64>, c: &DVector<f64>, n0: f64) -> f64 {
    let beta = h.dot(c);
    beta * beta / (n0 * c.dot(c))
}

/// Time-invariant LE limit `(h^T P h)^2 / (N0 h^T P^T P h)` with `P = [H H^T + N0 I]^-1`.
pub fn ti_le_snr(taps: &[f64], causal: usize, anticausal: usize, n0: f64) -> Result<f64> {
    check_noise(n0)?;
    let cm = build_channel_matrix(taps, causal, anticausal, None)?;
    let hm = cm.matrix();
    let m = hm * hm.transpose() + DMatrix::identity(cm.rows(), cm.rows()) * n0;
    let c = wiener(m, cm.target())?;
    Ok(gain_over_noise(cm.target(), &c, n0))
}

/// Feedforward taps of the time-invariant DFE with perfect feedback.
fn ti_dfe_taps(taps: &[f64], anticausal: usize, feedback: usize, n0: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    let cm = build_channel_matrix(taps, 0, anticausal, Some(feedback))?;
    let h2 = cm.h2();
    let m = &h2 * h2.transpose() + DMatrix::identity(cm.rows(), cm.rows()) * n0;
    let c = wiener(m, cm.target())?;
    Ok((c, cm.target().clone()))
}

/// Time-invariant DFE limit with `P_2 = [H_2 H_2^T + N0 I]^-1`.
pub fn ti_dfe_snr(taps: &[f64], anticausal: usize, feedback: usize, n0: f64) -> Result<f64> {
    check_noise(n0)?;
    let (c, h) = ti_dfe_taps(taps, anticausal, feedback, n0)?;
    Ok(gain_over_noise(&h, &c, n0))
}

/// Output-noise correlation of the forward and time-reversed TI-DFEs with perfect
/// feedback and priors.
///
/// The forward output of `x_n` sees `w_{n+i}` through `c_f[i]`; the backward one
/// sees `w_{n+L_h-i}` through `c_b[i]`, so the covariance pairs `c_f[i]` with
/// `c_b[L_h-i]`.
pub fn bidfe_noise_correlation(taps: &[f64], anticausal: usize, feedback: usize, n0: f64) -> Result<f64> {
    check_noise(n0)?;
    let mem = taps.len() - 1;
    if anticausal < mem {
        return Err(Error::InvalidSpan(format!(
            "feedforward span {anticausal} shorter than channel memory {mem}"
        )));
    }
    let (cf, _) = ti_dfe_taps(taps, anticausal, feedback, n0)?;
    let (cb, _) = ti_dfe_taps(&time_reverse(taps), anticausal, feedback, n0)?;
    let cross: f64 = (0..=mem).map(|i| cf[i] * cb[mem - i]).sum();
    Ok(cross / (cf.norm() * cb.norm()))
}

/// Simulated counterpart of [`bidfe_noise_correlation`]: runs both TI-DFEs on
/// `symbols` random symbols with saturated correct priors and correlates the
/// output noise.
pub fn measure_bidfe_noise_correlation(
    taps: &[f64],
    anticausal: usize,
    feedback: usize,
    n0: f64,
    symbols: usize,
    seed: u64,
) -> Result<f64> {
    let ch = ChannelModel::new(taps.to_vec(), n0)?;
    let x = bpsk_map(&random_bits(symbols, &mut stream_rng(seed, 0, Stream::Data)));
    let r = apply_channel_with(&x, &ch, &mut stream_rng(seed, 0, Stream::Noise));
    let la: Vec<f64> = x.iter().map(|v| v * LLR_CLIP).collect();
    let cfg = DfeConfig {
        anticausal,
        feedback,
        mode: FilterMode::Ti,
        error_aware: false,
    };
    let cm_f = build_channel_matrix(taps, 0, anticausal, Some(feedback))?;
    let cm_b = build_channel_matrix(&time_reverse(taps), 0, anticausal, Some(feedback))?;
    let f = dfe_equalize(&r, &cm_f, &cfg, &la, n0)?;
    let b = dfe_equalize(&r.reversed(), &cm_b, &cfg, &time_reverse(&la), n0)?.reversed();
    let nf: Vec<f64> = f.y.iter().zip(&f.beta).zip(&x).map(|((y, bt), x)| y - bt * x).collect();
    let nb: Vec<f64> = b.y.iter().zip(&b.beta).zip(&x).map(|((y, bt), x)| y - bt * x).collect();
    Ok(pearson(&nf, &nb))
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Output SNR of a QTI design at averaged variance `z_bar`, with every
/// interfering symbol's variance equal to `z_bar`.
pub fn qti_output_snr(kind: LimitKind, taps: &[f64], spans: &Spans, z_bar: f64, n0: f64) -> Result<f64> {
    check_noise(n0)?;
    let (beta, c, g, current) = match kind {
        LimitKind::QtiLe | LimitKind::TiLe => {
            let cm = build_channel_matrix(taps, spans.le_causal, spans.le_anticausal, None)?;
            let f = design_le_qti(&cm, z_bar, n0)?;
            (f.beta, f.c, f.g, cm.current_col())
        }
        LimitKind::QtiDfe | LimitKind::TiDfe => {
            let cm = build_channel_matrix(taps, 0, spans.dfe_anticausal, Some(spans.dfe_feedback))?;
            let f = design_dfe_qti(&cm, z_bar, n0)?;
            (f.beta, f.c, f.g, 0)
        }
        LimitKind::TiBidfe => {
            return Err(Error::config("kind", "BiDFE has no single-filter output SNR"))
        }
    };
    let noise = n0 * c.iter().map(|v| v * v).sum::<f64>();
    let isi: f64 = g
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != current)
        .map(|(_, v)| z_bar * v * v)
        .sum();
    Ok(beta * beta / (noise + isi))
}

/// Output SNR with perfect a priori information.
pub fn snr_infinity(kind: LimitKind, taps: &[f64], spans: &Spans, n0: f64) -> Result<SnrLimit> {
    check_noise(n0)?;
    let value = match kind {
        LimitKind::QtiLe | LimitKind::QtiDfe => 1.0 / n0,
        LimitKind::TiLe => ti_le_snr(taps, spans.le_causal, spans.le_anticausal, n0)?,
        LimitKind::TiDfe => ti_dfe_snr(taps, spans.dfe_anticausal, spans.dfe_feedback, n0)?,
        LimitKind::TiBidfe => {
            let rho = bidfe_noise_correlation(taps, spans.dfe_anticausal, spans.dfe_feedback, n0)?;
            2.0 / (1.0 + rho) * ti_dfe_snr(taps, spans.dfe_anticausal, spans.dfe_feedback, n0)?
        }
    };
    Ok(SnrLimit {
        kind,
        value,
        mi_ceiling: binary_awgn_capacity(value),
    })
}

fn check_noise(n0: f64) -> Result<()> {
    if n0 > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveNoise(n0))
    }
}

const QUAD_LIMIT: f64 = 12.0;
const QUAD_TOL: f64 = 1e-12;
const QUAD_PANELS: usize = 48;

/// `1 - C_b(snr)`: the expected `log2(1 + e^{-L})` of a consistent Gaussian LLR.
pub fn binary_awgn_capacity_loss(snr: f64) -> f64 {
    assert!(snr >= 0.0, "snr must be non-negative");
    let s = snr.sqrt();
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let f = |t: f64| norm * (-0.5 * t * t).exp() * softplus(-2.0 * t * s - 2.0 * snr) / std::f64::consts::LN_2;
    // short panels so the narrow peak near t = -sqrt(snr) is always resolved
    let width = 2.0 * QUAD_LIMIT / QUAD_PANELS as f64;
    (0..QUAD_PANELS)
        .map(|k| {
            let a = -QUAD_LIMIT + k as f64 * width;
            quadrature::integrate(f, a, a + width, QUAD_TOL).integral
        })
        .sum()
}

/// Symmetric information rate of the binary-input AWGN channel at linear `snr`.
pub fn binary_awgn_capacity(snr: f64) -> f64 {
    1.0 - binary_awgn_capacity_loss(snr)
}

/// `mean(1 - log2(1 + e^{-x L}))` over aligned LLRs and ±1 symbols.
pub fn estimate_mutual_information(llr: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(llr.len(), truth.len(), "MI needs aligned sequences");
    if llr.is_empty() {
        return 0.0;
    }
    let loss: f64 = llr
        .iter()
        .zip(truth)
        .map(|(&l, &x)| softplus(-x * clip_llr(l)))
        .sum::<f64>()
        / std::f64::consts::LN_2;
    1.0 - loss / llr.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitModule {
    Equalizer,
    Decoder,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExitPoint {
    pub iteration: usize,
    pub module: ExitModule,
    pub mi_in: f64,
    pub mi_out: f64,
}

/// Equalizer and decoder MI transfer per outer iteration. `coded_truth` holds
/// the transmitted codeword as ±1 symbols in codeword order.
pub fn exit_trajectory(record: &IterationRecord, coded_truth: &[f64]) -> Vec<ExitPoint> {
    let mut pts = Vec::with_capacity(2 * record.rounds.len());
    for (k, round) in record.rounds.iter().enumerate() {
        let eq_in = estimate_mutual_information(&round.equalizer_apriori, coded_truth);
        let eq_out = estimate_mutual_information(&round.equalizer_extrinsic, coded_truth);
        let dec_out = estimate_mutual_information(&round.decoder_extrinsic, coded_truth);
        pts.push(ExitPoint { iteration: k, module: ExitModule::Equalizer, mi_in: eq_in, mi_out: eq_out });
        pts.push(ExitPoint { iteration: k, module: ExitModule::Decoder, mi_in: eq_out, mi_out: dec_out });
    }
    pts
}

/// First iteration whose decoder output MI reaches `threshold`.
pub fn iterations_to_reach(points: &[ExitPoint], threshold: f64) -> Option<usize> {
    points
        .iter()
        .filter(|p| p.module == ExitModule::Decoder)
        .find(|p| p.mi_out >= threshold)
        .map(|p| p.iteration)
}

/// Highest equalizer output MI along a trajectory.
pub fn max_equalizer_mi(points: &[ExitPoint]) -> f64 {
    points
        .iter()
        .filter(|p| p.module == ExitModule::Equalizer)
        .map(|p| p.mi_out)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::standard_channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn memoryless_limits_coincide() {
        let spans = Spans::for_memory(0);
        for n0 in [1.0, 0.1, 0.01] {
            for kind in LimitKind::ALL {
                let v = snr_infinity(kind, &[1.0], &spans, n0).unwrap().value;
                assert!((v - 1.0 / n0).abs() < 1e-9 / n0, "{kind:?} {v}");
            }
        }
    }

    #[test]
    fn chain_on_h2() {
        let h = standard_channel("h2").unwrap();
        let s = Spans::for_memory(6);
        let le = ti_le_snr(&h, s.le_causal, s.le_anticausal, 0.1).unwrap();
        let dfe = ti_dfe_snr(&h, s.dfe_anticausal, s.dfe_feedback, 0.1).unwrap();
        let bi = snr_infinity(LimitKind::TiBidfe, &h, &s, 0.1).unwrap().value;
        assert!(le <= dfe && dfe <= bi && bi <= 10.0, "{le} {dfe} {bi}");
    }

    #[test]
    fn ti_le_matches_constructive_measurement() {
        let h = standard_channel("h3").unwrap();
        let s = Spans::for_memory(8);
        let closed = ti_le_snr(&h, s.le_causal, s.le_anticausal, 0.05).unwrap();
        let measured = qti_output_snr(LimitKind::TiLe, &h, &s, 1.0, 0.05).unwrap();
        // z_bar = 1 design, evaluated with all interference removed
        let cm = build_channel_matrix(&h, s.le_causal, s.le_anticausal, None).unwrap();
        let f = design_le_qti(&cm, 1.0, 0.05).unwrap();
        let at_perfect = f.beta * f.beta / (0.05 * f.c.iter().map(|v| v * v).sum::<f64>());
        assert!((closed - at_perfect).abs() < 1e-9 * closed);
        assert!(measured < closed);
    }

    #[test]
    fn capacity_endpoints() {
        assert!(binary_awgn_capacity(0.0).abs() < 1e-9);
        assert!(binary_awgn_capacity(100.0) > 0.9999);
        let mut prev = binary_awgn_capacity(0.0);
        for k in 1..=200 {
            let c = binary_awgn_capacity(k as f64 * 0.05);
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn mi_estimator_basics() {
        assert_eq!(estimate_mutual_information(&[0.0; 4], &[1.0, -1.0, 1.0, 1.0]), 0.0);
        let mi = estimate_mutual_information(&[60.0, -60.0], &[1.0, -1.0]);
        assert!(mi > 1.0 - 1e-15);
        let a = estimate_mutual_information(&[1.3, -0.2, 4.0], &[1.0, 1.0, -1.0]);
        let b = estimate_mutual_information(&[-1.3, 0.2, -4.0], &[-1.0, -1.0, 1.0]);
        assert_eq!(a, b);
    }

    #[test]
    fn mi_of_consistent_gaussian_llrs() {
        let snr: f64 = 0.7;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 200_000;
        let mut llr = Vec::with_capacity(n);
        let mut truth = Vec::with_capacity(n);
        for i in 0..n {
            let x = if i % 2 == 0 { 1.0 } else { -1.0 };
            let g: f64 = StandardNormal.sample(&mut rng);
            llr.push(2.0 * snr * x + 2.0 * snr.sqrt() * g);
            truth.push(x);
        }
        let mi = estimate_mutual_information(&llr, &truth);
        assert!((mi - binary_awgn_capacity(snr)).abs() < 0.01);
    }

    #[test]
    fn empty_record_has_no_points() {
        assert!(exit_trajectory(&IterationRecord::default(), &[]).is_empty());
    }
}
