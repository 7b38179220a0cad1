//! Orchestration of the equalizers: uncoded self-iteration between a main and
//! branch equalizers, and the coded schedules that add a decoder across an
//! interleaver.

mod equalizer;
mod schedule;

pub use equalizer::{run_equalizer, EqualizerKind, EqualizerSpec, SoftOutput};
pub use schedule::{
    combine_weighted, describe_cost, run_coded, sise1_turbo, sise2_turbo, sise_uncoded, single_turbo,
    CodedResult, CorrelationPolicy, CostLedger, IterationRecord, RoundRecord, Schedule, SelfIterationRecord,
    SiseConfig, UncodedResult,
};
