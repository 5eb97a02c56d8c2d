mod error;
mod estimates;
mod output;
mod phase;
mod run;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliResult;
use crate::estimates::{EstimateInputs, Preset};
use crate::output::Format;
use crate::phase::PhaseCommand;
use crate::run::RunOptions;

/// Order-(v/c)² two-body electrodynamics: runs, sweeps, phases and estimates.
#[derive(Parser, Debug)]
#[command(name = "darwinics", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (run and sweep default to ./darwinics-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Integrator tolerance, overriding the scenario's.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for randomized probe points.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario file.
    Run { scenario: PathBuf },
    /// Run the grid in a scenario's sweep block.
    Sweep { scenario: PathBuf },
    /// Phase shifts against their closed forms.
    Phase {
        #[command(subcommand)]
        kind: PhaseCommand,
    },
    /// Order-of-magnitude estimates.
    Estimates {
        #[arg(value_enum)]
        preset: Preset,
        #[command(flatten)]
        inputs: EstimateInputs,
    },
    /// Check a scenario without running it.
    Validate {
        scenario: PathBuf,
        /// Random states near the initial one at which to evaluate the equations of motion.
        #[arg(long, default_value_t = 16)]
        probes: usize,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(0) = cli.workers {
        return Err(error::CliError::validation("--workers", "must be at least 1"));
    }
    let opts = RunOptions {
        out: cli.out.clone().unwrap_or_else(|| PathBuf::from("darwinics-out")),
        tol: cli.tol,
        seed: cli.seed,
        workers: cli.workers,
        format: cli.format,
    };
    match &cli.command {
        Command::Run { scenario } => run::run(scenario, &opts),
        Command::Sweep { scenario } => run::sweep(scenario, &opts),
        Command::Validate { scenario, probes } => run::validate(scenario, &opts, *probes),
        Command::Phase { kind } => phase::phase(kind, cli.out.as_deref(), cli.format),
        Command::Estimates { preset, inputs } => estimates::estimates(*preset, inputs, cli.out.as_deref(), cli.format),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DARWINICS_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
