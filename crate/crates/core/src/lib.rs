//! Self-iterating soft equalization for severe intersymbol-interference channels.
//!
//! The crate is organized bottom-up:
//!
//! - [`signal`]: BPSK mapping, ISI channel simulation, channel catalog, mismatch model.
//! - [`soft`]: LLR algebra, correlation estimation, correlation-dependent scaling, combining.
//! - [`mmse`]: MMSE tap design and SISO equalization (LE, error-aware DFE, BiDFE, arbitration).
//! - [`trellis`]: BCJR MAP equalizer, the rate-1/2 RSC code and its BCJR decoder, interleaver.
//! - [`engine`]: uncoded self-iteration and the coded SISE 1 / SISE 2 / single turbo schedules.
//! - [`analysis`]: asymptotic output-SNR limits, binary-input AWGN information rate, EXIT data.
//! - [`harness`]: experiment configuration, seeded BER / EXIT sweeps, CSV output, cost tables.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod harness;
pub mod mmse;
pub mod signal;
pub mod soft;
pub mod trellis;

pub use error::{Error, Result};
