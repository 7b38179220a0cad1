//! MMSE filter design and soft-in soft-out equalization.
//!
//! Filters come in three flavours: time-varying (taps re-solved per symbol from
//! the prior variances), quasi-time-invariant (taps solved once per stage from
//! the time-averaged variance) and time-invariant (taps never use priors).
//! Residual variances stay time-varying in every mode.

mod bidfe;
mod dfe;
mod le;
mod matrix;

pub use bidfe::{arbitrate, bidfe_equalize, BidfeOutput, DEFAULT_ARBITRATION_WINDOW};
pub use dfe::{
    design_dfe_qti, design_dfe_tv, design_dfe_with_variances, dfe_equalize,
    dfe_extrinsic_error_aware, error_aware_llr, feedback_error_stats, DfeConfig, DfeFilter,
};
pub use le::{
    design_le_qti, design_le_tv, design_le_with_variances, le_equalize, le_equalize_tv,
    le_extrinsic, LeFilter,
};
pub use matrix::{build_channel_matrix, ChannelMatrix, Layout};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    Tv,
    Qti,
    Ti,
}

impl std::fmt::Display for FilterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FilterMode::Tv => "TV",
            FilterMode::Qti => "QTI",
            FilterMode::Ti => "TI",
        })
    }
}

/// Statistics of the interference `i_n` left by wrong past decisions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorStats {
    /// `Pr(i_n != 0)`
    pub prob_nonzero: f64,
    /// Unconditional mean of `i_n`.
    pub mean: f64,
}

/// Per-symbol equalizer outputs.
#[derive(Clone, Debug, Default)]
pub struct EqualizedFrame {
    pub y: Vec<f64>,
    /// Residual (noise plus ISI) variance.
    pub sigma2: Vec<f64>,
    /// Gain of the current symbol in `y`.
    pub beta: Vec<f64>,
    pub extrinsic: Vec<f64>,
    /// Hard decisions in {+1, -1}.
    pub hard: Vec<f64>,
    /// Feedback-error statistics; empty for linear equalizers.
    pub error_stats: Vec<ErrorStats>,
}

impl EqualizedFrame {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            y: Vec::with_capacity(n),
            sigma2: Vec::with_capacity(n),
            beta: Vec::with_capacity(n),
            extrinsic: Vec::with_capacity(n),
            hard: Vec::with_capacity(n),
            error_stats: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, y: f64, sigma2: f64, beta: f64) {
        self.y.push(y);
        self.sigma2.push(sigma2);
        self.beta.push(beta);
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Reverses every per-symbol field.
    pub fn reversed(mut self) -> Self {
        self.y.reverse();
        self.sigma2.reverse();
        self.beta.reverse();
        self.extrinsic.reverse();
        self.hard.reverse();
        self.error_stats.reverse();
        self
    }
}
