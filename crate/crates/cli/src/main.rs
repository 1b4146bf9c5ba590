use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rcp_cli::{run, ExperimentConfig, ExperimentKind, RunContext};

#[derive(Parser)]
#[command(name = "rcp", version, about = "Robust control pulse experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed, overriding the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Time steps per pulse, overriding the config
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Optimize a robust pulse
    Design,
    /// Error curve and Frenet data of each pulse
    Curve,
    /// Fidelity over one or two noise axes
    Sweep,
    /// Simulated process tomography
    Qpt,
    /// Randomized benchmarking
    Rb,
    /// Interleaved randomized benchmarking
    Irb,
    /// iSWAP robustness against qubit detuning
    Twoqubit,
    /// Worst-case noise margins
    Margin,
    /// RCP versus Gaussian fidelity over noise and coherence time
    Fig3d,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Self::Design => ExperimentKind::Design,
            Self::Curve => ExperimentKind::Curve,
            Self::Sweep => ExperimentKind::Sweep1d,
            Self::Qpt => ExperimentKind::Qpt,
            Self::Rb => ExperimentKind::Rb,
            Self::Irb => ExperimentKind::Irb,
            Self::Twoqubit => ExperimentKind::Twoqubit,
            Self::Margin => ExperimentKind::Margin,
            Self::Fig3d => ExperimentKind::Fig3d,
        }
    }
}

fn main_inner(cli: Cli) -> Result<()> {
    let g = cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let (mut cfg, base) = match &g.config {
        Some(path) => (
            ExperimentConfig::load(path)?,
            path.parent().map(PathBuf::from).unwrap_or_default(),
        ),
        None => (ExperimentConfig::default(), PathBuf::from(".")),
    };
    if g.seed.is_some() {
        cfg.seed = g.seed;
    }
    if g.steps.is_some() {
        cfg.steps = g.steps;
    }
    cfg.validate()?;
    let kind = cfg.resolve_kind(cli.command.kind())?;
    let written = run(kind, &cfg, &RunContext { base_dir: base }, &g.out)?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
