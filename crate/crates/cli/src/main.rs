//! Run orchestration: configuration, subcommands, reproducible outputs.
//!
//! Exit status: 0 on success, 1 when a solve fails to converge, 2 on an
//! invalid configuration. Every run writes a manifest with the effective
//! configuration and content hashes of the produced files.

mod config;
mod runs;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "pinwheel",
    about = "Variational solver for rotationally coupled nonlinear Schrödinger systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file (defaults apply when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. --set beta=-100 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides the config value).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Ground states of the limit problem and the invariant scalar problem.
    Scalar(RunArgs),
    /// Minimize the coupled energy over the Nehari manifold.
    Solve(RunArgs),
    /// Warm-started continuation along the coupling schedule.
    SweepBeta(RunArgs),
    /// Translated cutoff tuples and the energy-gap rate fit.
    Testfn(RunArgs),
    /// Segregated supports and interface diagnostics at strong coupling.
    Partition(RunArgs),
    /// Print the default configuration as JSON.
    DefaultConfig,
}

fn load(args: &RunArgs) -> Result<RunConfig, config::ConfigError> {
    let base = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut cfg = base.with_overrides(&args.set)?;
    if let Some(dir) = &args.out_dir {
        cfg.out_dir = dir.display().to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&RunArgs, fn(&RunConfig) -> runs::RunResult) = match &cli.command {
        Command::Scalar(a) => (a, runs::run_scalar),
        Command::Solve(a) => (a, runs::run_solve),
        Command::SweepBeta(a) => (a, runs::run_sweep_beta),
        Command::Testfn(a) => (a, runs::run_testfn),
        Command::Partition(a) => (a, runs::run_partition),
        Command::DefaultConfig => {
            println!(
                "{}",
                serde_json::to_string_pretty(&RunConfig::default()).expect("default serializes")
            );
            return ExitCode::SUCCESS;
        }
    };
    let cfg = match load(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(runs::RunError::NoConvergence(msg)) => {
            eprintln!("solver did not converge: {msg}");
            ExitCode::from(1)
        }
        Err(runs::RunError::Failed(msg)) => {
            eprintln!("run failed: {msg}");
            ExitCode::from(2)
        }
    }
}
