use std::io::Write;
use std::path::Path;

use super::config::ExperimentConfig;
use super::sweep::{BerResult, ExitRow};
use crate::analysis::ExitModule;
use crate::engine::{describe_cost, CostLedger};
use crate::Result;

pub const BER_COLUMNS: [&str; 10] = [
    "scheme", "convention", "snr_db", "n0", "iteration", "bit_errors", "bits", "ber", "ci95_half_width", "packets",
];

pub const EXIT_COLUMNS: [&str; 6] = ["scheme", "snr_db", "iteration", "module", "mi_in", "mi_out"];

pub const COST_COLUMNS: [&str; 7] = ["schedule", "main_passes", "branch_passes", "decoder_passes", "compute", "latency_t", "branches"];

/// Real number with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(out: &mut impl Write, kind: &str, cfg: &ExperimentConfig) -> Result<()> {
    writeln!(
        out,
        "# sise {kind} config_sha256={} root_seed={} snr_convention={}",
        cfg.hash(),
        cfg.seeds.root,
        cfg.convention()
    )?;
    Ok(())
}

pub fn write_ber_csv(out: impl Write, cfg: &ExperimentConfig, res: &BerResult) -> Result<()> {
    let mut out = out;
    header(&mut out, "ber", cfg)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(BER_COLUMNS)?;
    let conv = cfg.convention().to_string();
    for p in &res.points {
        for (it, c) in p.per_iteration.iter().enumerate() {
            w.write_record([
                res.label.clone(),
                conv.clone(),
                fmt_real(p.snr_db),
                fmt_real(p.n0),
                it.to_string(),
                c.errors.to_string(),
                c.bits.to_string(),
                fmt_real(c.ber()),
                fmt_real(c.ci_half_width()),
                p.packets.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_exit_csv(out: impl Write, cfg: &ExperimentConfig, rows: &[ExitRow]) -> Result<()> {
    let mut out = out;
    header(&mut out, "exit", cfg)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(EXIT_COLUMNS)?;
    let label = cfg.label();
    for r in rows {
        let module = match r.module {
            ExitModule::Equalizer => "equalizer",
            ExitModule::Decoder => "decoder",
        };
        w.write_record([
            label.clone(),
            fmt_real(r.snr_db),
            r.iteration.to_string(),
            module.to_string(),
            fmt_real(r.mi_in),
            fmt_real(r.mi_out),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-outer-iteration cost of the configured schedule.
pub fn cost_of(cfg: &ExperimentConfig) -> CostLedger {
    describe_cost(cfg.receiver.schedule, cfg.receiver.branches.len())
}

pub fn write_cost_csv(out: impl Write, cfg: &ExperimentConfig) -> Result<()> {
    let mut out = out;
    header(&mut out, "cost", cfg)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(COST_COLUMNS)?;
    let c = cost_of(cfg);
    w.write_record([
        format!("{:?}", cfg.receiver.schedule).to_lowercase(),
        c.main.to_string(),
        c.branch.to_string(),
        c.decoder.to_string(),
        c.formula(),
        format!("{}T", c.latency),
        cfg.receiver.branches.len().to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Writes to `path`, creating parent directories.
pub fn write_to_path(path: &Path, f: impl FnOnce(std::fs::File) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    f(std::fs::File::create(path)?)
}
