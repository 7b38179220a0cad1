use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use sise_core::analysis::{snr_infinity, LimitKind, Spans};
use sise_core::harness::{
    fmt_real, run_ber_sweep, run_exit, write_ber_csv, write_cost_csv, write_exit_csv, write_to_path,
    ExperimentConfig,
};
use sise_core::signal::{standard_channel, CHANNEL_NAMES};

#[derive(Parser)]
#[command(name = "sise", version, about = "Self-iterating soft equalization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER sweep.
    Ber(RunArgs),
    /// Block-averaged EXIT trajectories.
    Exit(RunArgs),
    /// Per-iteration compute and latency of the configured schedule.
    Cost(RunArgs),
    /// Channel catalog, optionally with the asymptotic output-SNR limits.
    Channels(ChannelArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the root seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination (`-` for stdout); falls back to the configured path, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ChannelArgs {
    /// Es/N0 in dB at which to report SNR limits and MI ceilings.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seeds.root = seed;
    }
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(cfg)
}

fn emit(
    out: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> sise_core::Result<()>,
) -> Result<()> {
    match out.filter(|p| p.as_os_str() != "-") {
        Some(path) => {
            write_to_path(path, |mut f| write(&mut f)).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            Ok(())
        }
    }
}

fn destination(args: &RunArgs, cfg: &ExperimentConfig) -> Option<PathBuf> {
    args.out.clone().or_else(|| cfg.output.path.clone())
}

fn channels(args: &ChannelArgs) -> Result<()> {
    let mut rows = vec![match args.snr_db {
        Some(_) => "name,memory,taps,kind,snr_infinity,mi_ceiling".to_string(),
        None => "name,memory,taps".to_string(),
    }];
    for name in CHANNEL_NAMES {
        let taps = standard_channel(name)?;
        let memory = taps.len() - 1;
        let joined = taps.iter().map(|&t| fmt_real(t)).collect::<Vec<_>>().join(" ");
        match args.snr_db {
            None => rows.push(format!("{name},{memory},{joined}")),
            Some(db) => {
                let n0 = 10f64.powf(-db / 10.0);
                for kind in LimitKind::ALL {
                    let l = snr_infinity(kind, &taps, &Spans::for_memory(memory), n0)?;
                    rows.push(format!(
                        "{name},{memory},{joined},{},{},{}",
                        kind.label(),
                        fmt_real(l.value),
                        fmt_real(l.mi_ceiling)
                    ));
                }
            }
        }
    }
    let text = rows.join("\n") + "\n";
    emit(args.out.as_deref(), |w| Ok(w.write_all(text.as_bytes())?))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Ber(args) => {
            let cfg = load(args)?;
            let res = run_ber_sweep(&cfg)?;
            emit(destination(args, &cfg).as_deref(), |w| write_ber_csv(w, &cfg, &res))
        }
        Command::Exit(args) => {
            let cfg = load(args)?;
            let rows = run_exit(&cfg)?;
            emit(destination(args, &cfg).as_deref(), |w| write_exit_csv(w, &cfg, &rows))
        }
        Command::Cost(args) => {
            let cfg = load(args)?;
            emit(destination(args, &cfg).as_deref(), |w| write_cost_csv(w, &cfg))
        }
        Command::Channels(args) => channels(args),
    }
}
