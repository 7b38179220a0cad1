use serde::{Deserialize, Serialize};

use crate::mmse::{
    bidfe_equalize, build_channel_matrix, design_le_qti, dfe_equalize, le_equalize, le_equalize_tv,
    DfeConfig, FilterMode, DEFAULT_ARBITRATION_WINDOW,
};
use crate::signal::ReceivedSequence;
use crate::soft::{clip_llr, hard_decision, priors_from_llr};
use crate::trellis::bcjr_equalize;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EqualizerKind {
    Le,
    Dfe,
    Bidfe,
    Map,
}

/// Which equalizer to run and with what spans.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqualizerSpec {
    pub kind: EqualizerKind,
    #[serde(default = "default_mode")]
    pub mode: FilterMode,
    /// Causal span `L_c` (LE only).
    #[serde(default)]
    pub causal: usize,
    /// Anticausal span `L_f`.
    #[serde(default)]
    pub anticausal: usize,
    /// Feedback span `L_d` (DFE and BiDFE).
    #[serde(default)]
    pub feedback: usize,
    /// Two-hypothesis extrinsic for DFE-based equalizers.
    #[serde(default = "default_true")]
    pub error_aware: bool,
    /// Arbitration window for BiDFE hard decisions.
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_mode() -> FilterMode {
    FilterMode::Qti
}

fn default_true() -> bool {
    true
}

fn default_window() -> usize {
    DEFAULT_ARBITRATION_WINDOW
}

impl EqualizerSpec {
    pub fn le(mode: FilterMode, causal: usize, anticausal: usize) -> Self {
        Self {
            kind: EqualizerKind::Le,
            mode,
            causal,
            anticausal,
            feedback: 0,
            error_aware: true,
            window: DEFAULT_ARBITRATION_WINDOW,
        }
    }

    pub fn dfe(mode: FilterMode, anticausal: usize, feedback: usize) -> Self {
        Self {
            kind: EqualizerKind::Dfe,
            feedback,
            ..Self::le(mode, 0, anticausal)
        }
    }

    pub fn bidfe(mode: FilterMode, anticausal: usize, feedback: usize) -> Self {
        Self {
            kind: EqualizerKind::Bidfe,
            ..Self::dfe(mode, anticausal, feedback)
        }
    }

    pub fn map() -> Self {
        Self {
            kind: EqualizerKind::Map,
            ..Self::le(FilterMode::Tv, 0, 0)
        }
    }

    pub fn with_error_aware(mut self, on: bool) -> Self {
        self.error_aware = on;
        self
    }

    /// Short label such as `QTI-LE` or `MAP`.
    pub fn label(&self) -> String {
        let kind = match self.kind {
            EqualizerKind::Le => "LE",
            EqualizerKind::Dfe => "DFE",
            EqualizerKind::Bidfe => "BiDFE",
            EqualizerKind::Map => return "MAP".to_string(),
        };
        format!("{}-{kind}", self.mode)
    }

    fn dfe_config(&self) -> DfeConfig {
        DfeConfig {
            anticausal: self.anticausal,
            feedback: self.feedback,
            mode: self.mode,
            error_aware: self.error_aware,
        }
    }

    /// Checks the spans against a channel of memory `memory`.
    pub fn validate(&self, memory: usize) -> Result<()> {
        match self.kind {
            EqualizerKind::Dfe | EqualizerKind::Bidfe if self.feedback < memory => {
                Err(Error::InvalidSpan(format!(
                    "{}: feedback span {} shorter than channel memory {memory}",
                    self.label(),
                    self.feedback
                )))
            }
            EqualizerKind::Bidfe if self.window % 2 == 0 => Err(Error::InvalidSpan(format!(
                "arbitration window must be odd, got {}",
                self.window
            ))),
            _ => Ok(()),
        }
    }
}

/// Clipped extrinsic LLRs and hard decisions of one equalizer pass.
#[derive(Clone, Debug)]
pub struct SoftOutput {
    pub extrinsic: Vec<f64>,
    pub hard: Vec<f64>,
}

/// One SISO pass of `spec` over `r`, assuming channel `taps` and noise `n0`.
pub fn run_equalizer(
    spec: &EqualizerSpec,
    r: &ReceivedSequence,
    taps: &[f64],
    n0: f64,
    apriori: &[f64],
) -> Result<SoftOutput> {
    if apriori.len() != r.packet_len() {
        return Err(Error::LengthMismatch {
            expected: r.packet_len(),
            actual: apriori.len(),
        });
    }
    let posterior_sign = |ext: &[f64]| -> Vec<f64> {
        ext.iter().zip(apriori).map(|(e, a)| hard_decision(e + a)).collect()
    };
    let (extrinsic, hard) = match spec.kind {
        EqualizerKind::Le => {
            let cm = build_channel_matrix(taps, spec.causal, spec.anticausal, None)?;
            let priors = priors_from_llr(apriori);
            let frame = match spec.mode {
                FilterMode::Tv => le_equalize_tv(r, &cm, &priors, n0)?,
                FilterMode::Qti => le_equalize(r, &design_le_qti(&cm, priors.avg_variance, n0)?, &cm, &priors, n0),
                FilterMode::Ti => le_equalize(r, &design_le_qti(&cm, 1.0, n0)?, &cm, &priors, n0),
            };
            let hard = posterior_sign(&frame.extrinsic);
            (frame.extrinsic, hard)
        }
        EqualizerKind::Dfe => {
            let cm = build_channel_matrix(taps, 0, spec.anticausal, Some(spec.feedback))?;
            let frame = dfe_equalize(r, &cm, &spec.dfe_config(), apriori, n0)?;
            (frame.extrinsic, frame.hard)
        }
        EqualizerKind::Bidfe => {
            let out = bidfe_equalize(r, taps, &spec.dfe_config(), apriori, n0, spec.window)?;
            (out.extrinsic, out.hard)
        }
        EqualizerKind::Map => {
            let ext = bcjr_equalize(r, taps, n0, apriori)?;
            let hard = posterior_sign(&ext);
            (ext, hard)
        }
    };
    Ok(SoftOutput {
        extrinsic: extrinsic.into_iter().map(clip_llr).collect(),
        hard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(EqualizerSpec::le(FilterMode::Qti, 13, 13).label(), "QTI-LE");
        assert_eq!(EqualizerSpec::bidfe(FilterMode::Ti, 20, 6).label(), "TI-BiDFE");
        assert_eq!(EqualizerSpec::map().label(), "MAP");
    }

    #[test]
    fn spec_validation() {
        assert!(EqualizerSpec::dfe(FilterMode::Qti, 20, 5).validate(6).is_err());
        assert!(EqualizerSpec::dfe(FilterMode::Qti, 20, 6).validate(6).is_ok());
        assert!(EqualizerSpec::le(FilterMode::Qti, 0, 0).validate(6).is_ok());
    }
}
