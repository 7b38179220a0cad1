use serde::{Deserialize, Serialize};

use super::equalizer::{run_equalizer, EqualizerKind, EqualizerSpec};
use crate::signal::ReceivedSequence;
use crate::soft::{correlation_scale, estimate_correlation, CorrelationStats};
use crate::trellis::{bcjr_decode, Interleaver};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Uncoded,
    Sise1,
    Sise2,
    Single,
}

/// How the correlation coefficient behind each scaling factor is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum CorrelationPolicy {
    #[default]
    Estimated,
    /// Use this coefficient on every scaling interface (combining is unaffected).
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiseConfig {
    pub main: EqualizerSpec,
    pub branches: Vec<EqualizerSpec>,
    /// Self-iterations for the uncoded schedule.
    pub self_iterations: usize,
    pub schedule: Schedule,
    pub correlation: CorrelationPolicy,
}

impl SiseConfig {
    pub fn new(schedule: Schedule, main: EqualizerSpec, branches: Vec<EqualizerSpec>) -> Self {
        Self {
            main,
            branches,
            self_iterations: 2,
            schedule,
            correlation: CorrelationPolicy::Estimated,
        }
    }

    pub fn validate(&self, memory: usize) -> Result<()> {
        self.main.validate(memory)?;
        for b in &self.branches {
            if b.kind == EqualizerKind::Map {
                return Err(Error::config("branches", "the MAP equalizer cannot be a branch"));
            }
            b.validate(memory)?;
        }
        if !self.branches.is_empty() && self.main.kind == EqualizerKind::Map {
            return Err(Error::config("main", "the MAP equalizer cannot be a self-iterating main"));
        }
        Ok(())
    }
}

/// Work per outer iteration in units of one main (`C_M`), branch (`C_B`) and
/// decoder (`C_D`) pass, and latency in units of one pass time `T`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CostLedger {
    pub main: usize,
    pub branch: usize,
    pub decoder: usize,
    pub latency: usize,
}

impl CostLedger {
    fn add(&mut self, other: CostLedger) {
        self.main += other.main;
        self.branch += other.branch;
        self.decoder += other.decoder;
        self.latency += other.latency;
    }

    /// Formula string such as `2C_M+C_B+C_D`.
    pub fn formula(&self) -> String {
        let term = |n: usize, name: &str| match n {
            0 => None,
            1 => Some(name.to_string()),
            n => Some(format!("{n}{name}")),
        };
        [term(self.main, "C_M"), term(self.branch, "C_B"), term(self.decoder, "C_D")]
            .into_iter()
            .flatten()
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Per-outer-iteration cost of a schedule. Branches run in parallel, so they
/// add one `T` regardless of their number.
pub fn describe_cost(schedule: Schedule, branches: usize) -> CostLedger {
    let b = branches.min(1);
    match schedule {
        Schedule::Single => CostLedger { main: 1, branch: 0, decoder: 1, latency: 2 },
        Schedule::Sise1 => CostLedger { main: 2, branch: branches, decoder: 1, latency: 3 + b },
        Schedule::Sise2 => CostLedger { main: 1, branch: branches, decoder: 1, latency: 2 },
        Schedule::Uncoded => CostLedger { main: 1, branch: branches, decoder: 0, latency: 1 + b },
    }
}

fn scale_for(policy: CorrelationPolicy, stats: &CorrelationStats) -> (f64, f64) {
    let rho = match policy {
        CorrelationPolicy::Estimated => stats.rho,
        CorrelationPolicy::Fixed(r) => r.clamp(0.0, 1.0),
    };
    (rho, correlation_scale(rho))
}

/// Scales `extrinsic` by the correlation-dependent factor computed against `reference`.
fn decorrelate(policy: CorrelationPolicy, extrinsic: &[f64], reference: &[f64]) -> (Vec<f64>, f64, f64) {
    let stats = estimate_correlation(reference, extrinsic);
    let (rho, alpha) = scale_for(policy, &stats);
    (extrinsic.iter().map(|v| alpha * v).collect(), rho, alpha)
}

/// Sequential pairwise combining that also reports the net weight applied to
/// each input, so that `sum_i w_i l_i` equals the combined sequence.
pub fn combine_weighted(inputs: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let Some((first, rest)) = inputs.split_first() else {
        return (Vec::new(), Vec::new());
    };
    let mut acc = first.to_vec();
    let mut weights = vec![1.0];
    for next in rest {
        let xi = estimate_correlation(&acc, next).rho;
        let s = 1.0 / (1.0 + xi);
        weights.iter_mut().for_each(|w| *w *= s);
        weights.push(s);
        acc.iter_mut().zip(next.iter()).for_each(|(a, b)| *a = (*a + b) * s);
    }
    (acc, weights)
}

#[derive(Clone, Debug, Default)]
pub struct SelfIterationRecord {
    /// Main-versus-branch-contribution correlation per branch.
    pub rho_main: Vec<f64>,
    /// Branch output versus branch input correlation per branch.
    pub rho_branch: Vec<f64>,
    pub alpha_main: Vec<f64>,
    pub alpha_branch: Vec<f64>,
}

/// Branch exchange state carried between main-equalizer passes.
struct BranchState {
    /// Scaled branch outputs, one per branch.
    to_main: Vec<Vec<f64>>,
    /// Net combining weight of each entry of `to_main` in the last main a priori.
    weights: Vec<f64>,
}

impl BranchState {
    fn new(branches: usize, len: usize) -> Self {
        Self {
            to_main: vec![vec![0.0; len]; branches],
            weights: vec![0.0; branches],
        }
    }

    /// Main a priori from the optional decoder feedback and the branch outputs.
    fn main_apriori(&mut self, decoder: Option<&[f64]>) -> Vec<f64> {
        let mut inputs: Vec<&[f64]> = Vec::with_capacity(self.to_main.len() + 1);
        if let Some(d) = decoder {
            inputs.push(d);
        }
        inputs.extend(self.to_main.iter().map(Vec::as_slice));
        if inputs.is_empty() {
            return Vec::new();
        }
        let (sum, w) = combine_weighted(&inputs);
        let skip = usize::from(decoder.is_some());
        self.weights = w[skip..].to_vec();
        sum
    }

    /// Branch-compensated copy of the main extrinsic for branch `i`.
    fn branch_input(&self, i: usize, policy: CorrelationPolicy, main_ext: &[f64]) -> (Vec<f64>, f64, f64) {
        let w = self.weights[i];
        let contribution: Vec<f64> = self.to_main[i].iter().map(|v| w * v).collect();
        decorrelate(policy, main_ext, &contribution)
    }
}

/// Runs every branch on its input and stores the decorrelated outputs.
fn run_branches(
    cfg: &SiseConfig,
    state: &mut BranchState,
    inputs: &[Vec<f64>],
    r: &ReceivedSequence,
    taps: &[f64],
    n0: f64,
    rec: &mut SelfIterationRecord,
) -> Result<()> {
    for (i, spec) in cfg.branches.iter().enumerate() {
        let out = run_equalizer(spec, r, taps, n0, &inputs[i])?;
        let (scaled, rho, alpha) = decorrelate(cfg.correlation, &out.extrinsic, &inputs[i]);
        state.to_main[i] = scaled;
        rec.rho_branch.push(rho);
        rec.alpha_branch.push(alpha);
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct UncodedResult {
    /// Decisions of the last main pass.
    pub hard: Vec<f64>,
    /// Main-equalizer posterior LLRs of the last pass.
    pub llr: Vec<f64>,
    /// Decisions of every main pass, in order.
    pub pass_decisions: Vec<Vec<f64>>,
    pub record: Vec<SelfIterationRecord>,
}

/// Uncoded self-iteration.
///
/// Each self-iteration starts with a main pass; between consecutive main passes
/// the branches exchange information with the main equalizer. Decisions come
/// from the last main pass, so `self_iterations` main passes are run (at least
/// one) and no branch exchange follows the final pass.
pub fn sise_uncoded(r: &ReceivedSequence, taps: &[f64], n0: f64, cfg: &SiseConfig) -> Result<UncodedResult> {
    cfg.validate(taps.len() - 1)?;
    let n = r.packet_len();
    let passes = if cfg.branches.is_empty() { 1 } else { cfg.self_iterations.max(1) };
    let mut state = BranchState::new(cfg.branches.len(), n);
    let mut la_main = vec![0.0; n];
    let mut out = run_equalizer(&cfg.main, r, taps, n0, &la_main)?;
    let mut pass_decisions = vec![out.hard.clone()];
    let mut record = Vec::with_capacity(passes - 1);
    for _ in 1..passes {
        let mut rec = SelfIterationRecord::default();
        let inputs: Vec<Vec<f64>> = (0..cfg.branches.len())
            .map(|i| {
                let (v, rho, alpha) = state.branch_input(i, cfg.correlation, &out.extrinsic);
                rec.rho_main.push(rho);
                rec.alpha_main.push(alpha);
                v
            })
            .collect();
        run_branches(cfg, &mut state, &inputs, r, taps, n0, &mut rec)?;
        la_main = state.main_apriori(None);
        out = run_equalizer(&cfg.main, r, taps, n0, &la_main)?;
        pass_decisions.push(out.hard.clone());
        record.push(rec);
    }
    let llr = out.extrinsic.iter().zip(&la_main).map(|(e, a)| e + a).collect();
    Ok(UncodedResult {
        hard: out.hard,
        llr,
        pass_decisions,
        record,
    })
}

/// Interface snapshots of one outer iteration, in codeword order.
#[derive(Clone, Debug, Default)]
pub struct RoundRecord {
    /// Decoder feedback the equalizer stage started from.
    pub equalizer_apriori: Vec<f64>,
    /// LLRs handed to the decoder.
    pub equalizer_extrinsic: Vec<f64>,
    pub decoder_extrinsic: Vec<f64>,
    /// Message decisions after this round's decoding.
    pub decisions: Vec<u8>,
    pub exchange: SelfIterationRecord,
}

#[derive(Clone, Debug, Default)]
pub struct IterationRecord {
    pub rounds: Vec<RoundRecord>,
    pub cost: CostLedger,
}

#[derive(Clone, Debug)]
pub struct CodedResult {
    pub decisions: Vec<u8>,
    pub record: IterationRecord,
}

struct Decoded {
    extrinsic_channel: Vec<f64>,
}

fn decode_round(
    il: &Interleaver,
    to_decoder: &[f64],
    la_dec: &[f64],
    exchange: SelfIterationRecord,
    record: &mut IterationRecord,
) -> Result<Decoded> {
    let eq_ext = il.deinterleave(to_decoder)?;
    let dec = bcjr_decode(&eq_ext)?;
    let decisions = dec.message_posterior.iter().map(|&l| u8::from(l < 0.0)).collect();
    let extrinsic_channel = il.interleave(&dec.extrinsic)?;
    record.rounds.push(RoundRecord {
        equalizer_apriori: il.deinterleave(la_dec)?,
        equalizer_extrinsic: eq_ext,
        decoder_extrinsic: dec.extrinsic,
        decisions,
        exchange,
    });
    Ok(Decoded { extrinsic_channel })
}

fn finish(mut record: IterationRecord, cost: CostLedger) -> CodedResult {
    let rounds = record.rounds.len();
    for _ in 0..rounds {
        record.cost.add(cost);
    }
    let decisions = record.rounds.last().map(|r| r.decisions.clone()).unwrap_or_default();
    CodedResult { decisions, record }
}

/// Conventional turbo equalization: equalizer and decoder exchange extrinsic
/// LLRs for `outer + 1` decoding rounds.
pub fn single_turbo(
    r: &ReceivedSequence,
    taps: &[f64],
    n0: f64,
    il: &Interleaver,
    main: &EqualizerSpec,
    outer: usize,
) -> Result<CodedResult> {
    main.validate(taps.len() - 1)?;
    let mut la_dec = vec![0.0; r.packet_len()];
    let mut record = IterationRecord::default();
    for _ in 0..=outer {
        let out = run_equalizer(main, r, taps, n0, &la_dec)?;
        la_dec = decode_round(il, &out.extrinsic, &la_dec, SelfIterationRecord::default(), &mut record)?
            .extrinsic_channel;
    }
    Ok(finish(record, describe_cost(Schedule::Single, 0)))
}

/// Each outer iteration completes one self-iteration with the branches before
/// the main equalizer's extrinsic goes to the decoder.
pub fn sise1_turbo(
    r: &ReceivedSequence,
    taps: &[f64],
    n0: f64,
    il: &Interleaver,
    cfg: &SiseConfig,
    outer: usize,
) -> Result<CodedResult> {
    if cfg.branches.is_empty() {
        return single_turbo(r, taps, n0, il, &cfg.main, outer);
    }
    cfg.validate(taps.len() - 1)?;
    let n = r.packet_len();
    let mut state = BranchState::new(cfg.branches.len(), n);
    let mut la_dec = vec![0.0; n];
    let mut record = IterationRecord::default();
    for _ in 0..=outer {
        let mut rec = SelfIterationRecord::default();
        let la_main = state.main_apriori(Some(&la_dec));
        let first = run_equalizer(&cfg.main, r, taps, n0, &la_main)?;
        let inputs: Vec<Vec<f64>> = (0..cfg.branches.len())
            .map(|i| {
                let (v, rho, alpha) = state.branch_input(i, cfg.correlation, &first.extrinsic);
                rec.rho_main.push(rho);
                rec.alpha_main.push(alpha);
                v
            })
            .collect();
        run_branches(cfg, &mut state, &inputs, r, taps, n0, &mut rec)?;
        let la_main = state.main_apriori(Some(&la_dec));
        let second = run_equalizer(&cfg.main, r, taps, n0, &la_main)?;
        la_dec = decode_round(il, &second.extrinsic, &la_dec, rec, &mut record)?.extrinsic_channel;
    }
    Ok(finish(record, describe_cost(Schedule::Sise1, cfg.branches.len())))
}

/// The main extrinsic goes to the branches (decorrelated) and to the decoder in
/// the same stage; branch and decoder feedback merge into the next main a priori.
pub fn sise2_turbo(
    r: &ReceivedSequence,
    taps: &[f64],
    n0: f64,
    il: &Interleaver,
    cfg: &SiseConfig,
    outer: usize,
) -> Result<CodedResult> {
    if cfg.branches.is_empty() {
        return single_turbo(r, taps, n0, il, &cfg.main, outer);
    }
    cfg.validate(taps.len() - 1)?;
    let n = r.packet_len();
    let mut state = BranchState::new(cfg.branches.len(), n);
    let mut la_dec = vec![0.0; n];
    let mut record = IterationRecord::default();
    for _ in 0..=outer {
        let mut rec = SelfIterationRecord::default();
        let la_main = state.main_apriori(Some(&la_dec));
        let out = run_equalizer(&cfg.main, r, taps, n0, &la_main)?;
        let inputs: Vec<Vec<f64>> = (0..cfg.branches.len())
            .map(|i| {
                let (v, rho, alpha) = state.branch_input(i, cfg.correlation, &out.extrinsic);
                rec.rho_main.push(rho);
                rec.alpha_main.push(alpha);
                v
            })
            .collect();
        run_branches(cfg, &mut state, &inputs, r, taps, n0, &mut rec)?;
        // Main extrinsic already excludes the decoder feedback it was given.
        la_dec = decode_round(il, &out.extrinsic, &la_dec, rec, &mut record)?.extrinsic_channel;
    }
    Ok(finish(record, describe_cost(Schedule::Sise2, cfg.branches.len())))
}

/// Dispatches on `cfg.schedule`; the uncoded schedule is rejected here.
pub fn run_coded(
    r: &ReceivedSequence,
    taps: &[f64],
    n0: f64,
    il: &Interleaver,
    cfg: &SiseConfig,
    outer: usize,
) -> Result<CodedResult> {
    match cfg.schedule {
        Schedule::Single => single_turbo(r, taps, n0, il, &cfg.main, outer),
        Schedule::Sise1 => sise1_turbo(r, taps, n0, il, cfg, outer),
        Schedule::Sise2 => sise2_turbo(r, taps, n0, il, cfg, outer),
        Schedule::Uncoded => Err(Error::config("schedule", "uncoded schedule has no decoder")),
    }
}
