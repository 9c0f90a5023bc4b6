//! Command-line driver for α-patch contour dynamics.
//!
//! Exit status: 0 success, 1 usage or I/O error, 2 run stopped early with
//! partial output written, 3 verification finished with unstable constants.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::Outcome;
use config::RunConfig;

/// Caps the number of worker threads.
const THREADS_VAR: &str = "ALPHA_PATCH_THREADS";

#[derive(Parser)]
#[command(name = "alpha-patch", version, about = "Contour dynamics and estimate checks for α-SQG patches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a patch boundary, writing snapshots and diagnostics.csv.
    Simulate(Invocation),
    /// Evolve two nearby patches, writing stability.csv and fit.json.
    Twin(Invocation),
    /// Check the regularity and kernel estimates, writing estimates.csv.
    Verify(Invocation),
    /// Refinement study, writing convergence.csv.
    Convergence(Invocation),
}

#[derive(Args)]
struct Invocation {
    /// JSON file with run configuration fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: RunConfig,
}

impl Invocation {
    fn resolve(self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(self.flags))
    }
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{THREADS_VAR} must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome> {
    init_threads()?;
    match cli.command {
        Command::Simulate(inv) => commands::simulate(&inv.resolve()?),
        Command::Twin(inv) => commands::twin(&inv.resolve()?),
        Command::Verify(inv) => commands::verify(&inv.resolve()?),
        Command::Convergence(inv) => commands::convergence(&inv.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Ok(Outcome::SoftFailure) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
