use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Column layout of a [`ChannelMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Observation window `r_{n-causal} .. r_{n+anticausal}`.
    Linear { causal: usize, anticausal: usize },
    /// Observation window `r_n .. r_{n+anticausal}`, with `feedback` past symbols cancelled.
    Feedback { anticausal: usize, feedback: usize },
}

/// Banded Toeplitz matrix mapping the symbols that touch an observation window
/// to the window samples, plus the coefficient vector of the current symbol.
#[derive(Clone, Debug)]
pub struct ChannelMatrix {
    taps: Vec<f64>,
    h: DMatrix<f64>,
    target: DVector<f64>,
    current_col: usize,
    layout: Layout,
}

/// Builds the channel matrix for a linear (`feedback = None`) or decision-feedback window.
///
/// Column `j` of the linear layout multiplies `x_{n - causal - L_h + j}`; column `j`
/// of the feedback layout multiplies `x_{n - feedback + j}`. The coefficient vector
/// of `x_n` is `[0 (causal times), h_0, h_1, ...]`, truncated to the window.
pub fn build_channel_matrix(
    taps: &[f64],
    causal: usize,
    anticausal: usize,
    feedback: Option<usize>,
) -> Result<ChannelMatrix> {
    if taps.is_empty() {
        return Err(Error::ZeroChannel);
    }
    let memory = taps.len() - 1;
    let (rows, lead, layout) = match feedback {
        None => (
            1 + causal + anticausal,
            memory,
            Layout::Linear {
                causal,
                anticausal,
            },
        ),
        Some(fb) => {
            if causal != 0 {
                return Err(Error::InvalidSpan(format!(
                    "decision-feedback windows have no causal taps (got {causal})"
                )));
            }
            if fb < memory {
                return Err(Error::InvalidSpan(format!(
                    "feedback span {fb} shorter than channel memory {memory}"
                )));
            }
            (
                1 + anticausal,
                fb,
                Layout::Feedback {
                    anticausal,
                    feedback: fb,
                },
            )
        }
    };
    let offset = match layout {
        Layout::Linear { causal, .. } => causal,
        Layout::Feedback { .. } => 0,
    };
    let cols = rows + lead;
    // row i is the sample r_{n - offset + i}; column j the symbol x_{n - offset - lead + j}
    let h = DMatrix::from_fn(rows, cols, |i, j| {
        let k = i as isize + lead as isize - j as isize;
        if (0..=memory as isize).contains(&k) {
            taps[k as usize]
        } else {
            0.0
        }
    });
    let current_col = offset + lead;
    let target = h.column(current_col).into_owned();
    Ok(ChannelMatrix {
        taps: taps.to_vec(),
        h,
        target,
        current_col,
        layout,
    })
}

impl ChannelMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Coefficient vector of the current symbol.
    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Window length `L`.
    pub fn rows(&self) -> usize {
        self.h.nrows()
    }

    pub fn cols(&self) -> usize {
        self.h.ncols()
    }

    /// Column index of the current symbol.
    pub fn current_col(&self) -> usize {
        self.current_col
    }

    /// Offset from `n` of the symbol multiplied by column 0.
    pub fn first_symbol_offset(&self) -> isize {
        -(self.current_col as isize)
    }

    /// Offset from `n` of the sample in window row 0.
    pub fn first_sample_offset(&self) -> isize {
        match self.layout {
            Layout::Linear { causal, .. } => -(causal as isize),
            Layout::Feedback { .. } => 0,
        }
    }

    /// Number of leading (past) columns; the feedback span in DFE layout.
    pub fn lead(&self) -> usize {
        self.h.ncols() - self.h.nrows()
    }

    /// `H1`: the first `L_d` columns (DFE layout only).
    pub fn h1(&self) -> DMatrix<f64> {
        self.h.columns(0, self.current_col).into_owned()
    }

    /// `H2`: columns from the current symbol onwards (DFE layout only).
    pub fn h2(&self) -> DMatrix<f64> {
        let n = self.h.ncols() - self.current_col;
        self.h.columns(self.current_col, n).into_owned()
    }

    /// `H diag(a) H^T + N0 I` restricted to the columns from `first_col` on.
    pub(crate) fn covariance(&self, first_col: usize, a: &[f64], n0: f64) -> DMatrix<f64> {
        let rows = self.rows();
        let memory = self.taps.len() - 1;
        let mut m = DMatrix::from_diagonal_element(rows, rows, n0);
        for (col, &ak) in (first_col..self.cols()).zip(a) {
            if ak == 0.0 {
                continue;
            }
            // nonzero rows of column `col` lie in [col - lead, col - lead + memory]
            let lo = col.saturating_sub(self.lead());
            let hi = (col + memory + 1).saturating_sub(self.lead()).min(rows);
            for i in lo..hi {
                let hi_col = self.h[(i, col)];
                if hi_col == 0.0 {
                    continue;
                }
                for j in lo..hi {
                    m[(i, j)] += ak * hi_col * self.h[(j, col)];
                }
            }
        }
        m
    }
}

/// Solves `m x = b` for symmetric positive-definite `m`.
pub(crate) fn solve_spd(m: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = m.cholesky().ok_or(Error::Singular)?;
    Ok(chol.solve(b))
}
