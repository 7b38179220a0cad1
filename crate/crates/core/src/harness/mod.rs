//! Experiment runner: TOML configuration, seeded Monte Carlo BER and EXIT
//! sweeps with packet-level parallelism, and CSV output.
//!
//! A minimal configuration:
//!
//! ```toml
//! [channel]
//! name = "h2"
//!
//! [code]
//! enabled = true
//! outer_iterations = 20
//!
//! [receiver]
//! schedule = "sise2"
//! main = { kind = "dfe", mode = "qti", anticausal = 20, feedback = 6 }
//! branches = [{ kind = "le", mode = "qti", causal = 13, anticausal = 13 }]
//!
//! [sweep]
//! snr_db = [8.0, 9.0, 10.0]
//! packets = 1000
//! min_errors = 100
//!
//! [seeds]
//! root = 7
//! ```

mod config;
mod output;
mod sweep;

pub use config::{
    ChannelSection, CodeSection, ExperimentConfig, OutputSection, ReceiverSection, SeedSection, SnrConvention,
    SweepSection,
};
pub use output::{
    cost_of, fmt_real, write_ber_csv, write_cost_csv, write_exit_csv, write_to_path, BER_COLUMNS, COST_COLUMNS,
    EXIT_COLUMNS,
};
pub use sweep::{
    exit_block, run_ber_point, run_ber_sweep, run_exit, simulate_packet, BerPoint, BerResult, ErrorCount, ExitRow,
    PacketOutcome,
};
