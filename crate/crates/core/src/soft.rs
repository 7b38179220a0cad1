//! Soft-information algebra shared by every constituent equalizer.
//!
//! LLRs follow `L = ln Pr(x=+1)/Pr(x=-1)` and are clipped to [`LLR_CLIP`]
//! before they reach any estimator or `tanh`.

/// Magnitude limit applied to every LLR entering an estimator.
pub const LLR_CLIP: f64 = 50.0;

#[inline]
pub fn clip_llr(l: f64) -> f64 {
    l.clamp(-LLR_CLIP, LLR_CLIP)
}

/// Hard decision on an LLR or soft symbol; zero decides +1.
#[inline]
pub fn hard_decision(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Exact Jacobian logarithm `ln(e^a + e^b)`.
#[inline]
pub fn max_star(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Soft symbol means `tanh(L_k / 2)`, forced to zero at `suppressed`.
pub fn symbol_mean_from_llr(llr: &[f64], suppressed: Option<usize>) -> Vec<f64> {
    let mut mean: Vec<f64> = llr.iter().map(|&l| (clip_llr(l) / 2.0).tanh()).collect();
    if let Some(i) = suppressed {
        if let Some(m) = mean.get_mut(i) {
            *m = 0.0;
        }
    }
    mean
}

/// Per-symbol mean and variance of the transmitted symbols implied by a priori LLRs.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolPriors {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Time average of `variance` over the packet.
    pub avg_variance: f64,
}

impl SymbolPriors {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Mean at `k`; zero-guard symbols outside the packet have mean 0.
    #[inline]
    pub fn mean_at(&self, k: isize) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.mean.get(k as usize).copied().unwrap_or(0.0)
        }
    }

    /// Variance at `k`; guard symbols are designed for as unknown (variance 1).
    #[inline]
    pub fn variance_at(&self, k: isize) -> f64 {
        if k < 0 {
            1.0
        } else {
            self.variance.get(k as usize).copied().unwrap_or(1.0)
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            mean: self.mean.iter().rev().copied().collect(),
            variance: self.variance.iter().rev().copied().collect(),
            avg_variance: self.avg_variance,
        }
    }
}

pub fn priors_from_llr(llr: &[f64]) -> SymbolPriors {
    let mean = symbol_mean_from_llr(llr, None);
    let variance: Vec<f64> = mean.iter().map(|m| (1.0 - m * m).max(0.0)).collect();
    let avg_variance = if variance.is_empty() {
        1.0
    } else {
        variance.iter().sum::<f64>() / variance.len() as f64
    };
    SymbolPriors {
        mean,
        variance,
        avg_variance,
    }
}

/// Result of the sign-conditional correlation estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationStats {
    /// Correlation coefficient clamped to `[0, 1]`; 0 when degenerate.
    pub rho: f64,
    /// Unclamped estimate (NaN when degenerate).
    pub rho_raw: f64,
    /// Conditional mean magnitude of the first sequence.
    pub m_a: f64,
    /// Conditional mean magnitude of the second sequence.
    pub m_e: f64,
    /// Equivalent noise variances of the two sequences (measured on the sign-agreeing set).
    pub n_a: f64,
    pub n_e: f64,
    /// Number of sign-agreeing samples used.
    pub samples: usize,
    pub degenerate: bool,
}

impl CorrelationStats {
    fn degenerate(m_a: f64, m_e: f64) -> Self {
        Self {
            rho: 0.0,
            rho_raw: f64::NAN,
            m_a,
            m_e,
            n_a: f64::NAN,
            n_e: f64::NAN,
            samples: 0,
            degenerate: true,
        }
    }

    /// `sqrt(N_a / N_e)`, NaN when degenerate.
    pub fn lambda(&self) -> f64 {
        (self.n_a / self.n_e).sqrt()
    }
}

/// Half the gap between the means of the non-negative and the negative samples.
fn conditional_mean(l: &[f64]) -> Option<f64> {
    let (mut sp, mut np, mut sn, mut nn) = (0.0, 0usize, 0.0, 0usize);
    for &v in l {
        let v = clip_llr(v);
        if v >= 0.0 {
            sp += v;
            np += 1;
        } else {
            sn += v;
            nn += 1;
        }
    }
    if np == 0 || nn == 0 {
        return None;
    }
    Some(0.5 * (sp / np as f64 - sn / nn as f64))
}

/// Correlation coefficient between the noise parts of two LLR sequences.
///
/// Only indices where both sequences carry the same sign contribute. Constant or
/// single-signed inputs, and fewer than two agreeing samples, are degenerate.
pub fn estimate_correlation(a: &[f64], e: &[f64]) -> CorrelationStats {
    assert_eq!(a.len(), e.len(), "correlation needs aligned sequences");
    let (m_a, m_e) = match (conditional_mean(a), conditional_mean(e)) {
        (Some(ma), Some(me)) => (ma, me),
        (ma, me) => {
            return CorrelationStats::degenerate(ma.unwrap_or(f64::NAN), me.unwrap_or(f64::NAN))
        }
    };
    let (mut sae, mut saa, mut see, mut count) = (0.0, 0.0, 0.0, 0usize);
    for (&la, &le) in a.iter().zip(e) {
        let (la, le) = (clip_llr(la), clip_llr(le));
        let sa = hard_decision(la);
        if sa != hard_decision(le) {
            continue;
        }
        let da = la - sa * m_a;
        let de = le - sa * m_e;
        sae += da * de;
        saa += da * da;
        see += de * de;
        count += 1;
    }
    let denom = (saa * see).sqrt();
    if count < 2 || !(denom > 0.0) {
        return CorrelationStats::degenerate(m_a, m_e);
    }
    let rho_raw = (sae / denom).clamp(-1.0, 1.0);
    CorrelationStats {
        rho: rho_raw.clamp(0.0, 1.0),
        rho_raw,
        m_a,
        m_e,
        n_a: saa / count as f64,
        n_e: see / count as f64,
        samples: count,
        degenerate: false,
    }
}

/// Correlation-dependent scaling `(1 - rho) / (1 + rho)`.
pub fn correlation_scale(rho: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&rho), "rho {rho} outside [0, 1]");
    (1.0 - rho) / (1.0 + rho)
}

/// MSE-optimal scaling of the extrinsic LLR under the equivalent-Gaussian-channel
/// model, for arbitrary noise variances. Reference only; the loop uses
/// [`correlation_scale`].
pub fn exact_alpha(rho: f64, lambda: f64, n_a: f64, n_e: f64) -> crate::Result<f64> {
    if rho.abs() >= 1.0 {
        return Err(crate::Error::DegenerateCorrelation(rho));
    }
    let num = (lambda - rho)
        * (n_a * (1.0 + n_e) - lambda * rho * n_e * (1.0 + rho * (n_a * n_e).sqrt()));
    let den = lambda * (1.0 - rho * rho) * n_a * (1.0 + n_e);
    Ok(num / den)
}

/// Scaled extrinsic plus the correlation statistics it was derived from.
#[derive(Clone, Debug)]
pub struct ScaledLlr {
    pub llr: Vec<f64>,
    pub stats: CorrelationStats,
    pub alpha: f64,
}

/// Turns an extrinsic sequence into a priori information for the next equalizer,
/// compensating for its correlation with the a priori the producer consumed.
pub fn make_a_priori(extrinsic: &[f64], a_priori_used: &[f64]) -> ScaledLlr {
    let stats = estimate_correlation(a_priori_used, extrinsic);
    let alpha = correlation_scale(stats.rho);
    ScaledLlr {
        llr: extrinsic.iter().map(|&l| alpha * l).collect(),
        stats,
        alpha,
    }
}

/// Whitened sum `(l1 + l2) / (1 + xi)` of two correlated LLR sequences.
pub fn combine_two_branch(l1: &[f64], l2: &[f64]) -> (Vec<f64>, CorrelationStats) {
    let stats = estimate_correlation(l1, l2);
    let w = 1.0 / (1.0 + stats.rho);
    (l1.iter().zip(l2).map(|(a, b)| (a + b) * w).collect(), stats)
}

/// Pairwise combination of any number of branches in index order.
pub fn combine_branches(branches: &[Vec<f64>]) -> Vec<f64> {
    let mut iter = branches.iter();
    let Some(first) = iter.next() else {
        return Vec::new();
    };
    iter.fold(first.clone(), |acc, next| combine_two_branch(&acc, next).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// LLRs of `x + u` with `u` Gaussian of variance `n`, two sequences with noise correlation `rho`.
    fn correlated_llrs(len: usize, n: f64, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Vec::with_capacity(len);
        let mut e = Vec::with_capacity(len);
        for _ in 0..len {
            let x = if rand::Rng::random::<bool>(&mut rng) { 1.0 } else { -1.0 };
            let g1: f64 = StandardNormal.sample(&mut rng);
            let g2: f64 = StandardNormal.sample(&mut rng);
            let u1 = g1;
            let u2 = rho * g1 + (1.0 - rho * rho).sqrt() * g2;
            a.push(2.0 * (x + n.sqrt() * u1) / n);
            e.push(2.0 * (x + n.sqrt() * u2) / n);
        }
        (a, e)
    }

    #[test]
    fn symbol_means() {
        let m = symbol_mean_from_llr(&[0.0, 1e9, 2.0 * 0.5f64.atanh(), 3.0], Some(3));
        assert_eq!(m[0], 0.0);
        assert_eq!(m[1], 1.0);
        assert!((m[2] - 0.5).abs() < 1e-15);
        assert_eq!(m[3], 0.0);
    }

    #[test]
    fn priors() {
        let p = priors_from_llr(&[0.0; 5]);
        assert!(p.variance.iter().all(|&z| z == 1.0));
        assert_eq!(p.avg_variance, 1.0);
        let p = priors_from_llr(&[f64::INFINITY, f64::NEG_INFINITY]);
        assert_eq!(p.avg_variance, 0.0);
        let p = priors_from_llr(&[0.0, 2.0 * 0.6f64.atanh()]);
        assert!((p.variance[1] - 0.64).abs() < 1e-14);
        assert!((p.avg_variance - 0.82).abs() < 1e-14);
    }

    #[test]
    fn self_correlation_is_one() {
        let (a, _) = correlated_llrs(1000, 0.5, 0.0, 1);
        let s = estimate_correlation(&a, &a);
        assert!(!s.degenerate);
        assert!((s.rho - 1.0).abs() < 1e-12);
        let scaled: Vec<f64> = a.iter().map(|v| 3.7 * v).collect();
        assert!((estimate_correlation(&scaled, &a).rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_noise_gives_zero() {
        let (a, e) = correlated_llrs(100_000, 0.1, 0.0, 2);
        let s = estimate_correlation(&a, &e);
        assert!(s.rho_raw.abs() < 0.02, "rho {}", s.rho_raw);
    }

    #[test]
    fn recovers_known_correlation() {
        // noise variance 0.1 keeps sign disagreements rare enough for the
        // sign-restricted estimator to stay unbiased to within the tolerance
        let (a, e) = correlated_llrs(100_000, 0.1, 0.6, 3);
        let s = estimate_correlation(&a, &e);
        assert!((s.rho - 0.6).abs() < 0.05, "rho {}", s.rho);
    }

    #[test]
    fn degenerate_inputs() {
        let z = vec![0.0; 10];
        let l: Vec<f64> = (0..10).map(|i| i as f64 - 4.5).collect();
        assert!(estimate_correlation(&z, &l).degenerate);
        assert!(estimate_correlation(&[1.0, 2.0, 3.0], &[1.0, -2.0, 5.0]).degenerate);
        assert!(estimate_correlation(&[1.0], &[1.0]).degenerate);
    }

    #[test]
    fn scaling_law() {
        assert_eq!(correlation_scale(0.0), 1.0);
        assert_eq!(correlation_scale(1.0), 0.0);
        assert!((correlation_scale(1.0 / 3.0) - 0.5).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let a = correlation_scale(i as f64 / 1000.0);
            assert!(a < prev);
            prev = a;
        }
    }

    #[test]
    fn exact_alpha_cases() {
        for &(l, na, ne) in &[(1.0, 1.0, 1.0), (2.0, 0.3, 5.0), (0.4, 2.0, 0.1)] {
            assert!((exact_alpha(0.0, l, na, ne).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((exact_alpha(0.5, 1.0, 1.0, 1.0).unwrap() - 5.0 / 12.0).abs() < 1e-15);
        let small = exact_alpha(0.3, 1.0, 1e-9, 1e-9).unwrap();
        assert!((small - correlation_scale(0.3)).abs() < 1e-8);
        assert!(exact_alpha(1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn a_priori_construction() {
        let (a, e) = correlated_llrs(2000, 0.5, 0.0, 4);
        let first = make_a_priori(&e, &vec![0.0; e.len()]);
        assert!(first.stats.degenerate);
        assert_eq!(first.llr, e);

        let echo = make_a_priori(&a, &a);
        assert!(echo.llr.iter().all(|&v| v == 0.0));

        let (used, ext) = correlated_llrs(100_000, 0.1, 0.6, 5);
        let out = make_a_priori(&ext, &used);
        assert!((out.alpha - 0.25).abs() < 0.04, "alpha {}", out.alpha);
    }

    #[test]
    fn combining() {
        let (a, b) = correlated_llrs(100_000, 0.1, 0.0, 6);
        let (same, s) = combine_two_branch(&a, &a);
        assert!((s.rho - 1.0).abs() < 1e-12);
        assert!(same.iter().zip(&a).all(|(x, y)| (x - y).abs() < 1e-12));

        let (sum, s) = combine_two_branch(&a, &b);
        assert!(s.rho < 0.02);
        let err = sum
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(c, (x, y))| (c - (x + y)).abs() / (x + y).abs().max(1.0))
            .fold(0.0, f64::max);
        assert!(err < 0.02, "{err}");

        let (pass, s) = combine_two_branch(&a, &vec![0.0; a.len()]);
        assert!(s.degenerate);
        assert_eq!(pass, a);

        assert_eq!(combine_branches(&[a.clone()]), a);
        assert!(combine_branches(&[]).is_empty());
    }

    #[test]
    fn max_star_is_log_sum_exp() {
        for &(a, b) in &[(0.0, 0.0), (1.0, -3.0), (-700.0, -701.0), (40.0, 41.5)] {
            let direct = (f64::exp(a - 50.0) + f64::exp(b - 50.0)).ln() + 50.0;
            if direct.is_finite() {
                assert!((max_star(a, b) - direct).abs() < 1e-12);
            }
        }
        assert_eq!(max_star(f64::NEG_INFINITY, 2.0), 2.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
    }
}
