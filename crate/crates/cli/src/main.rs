//! `steerlab`: config-driven runner for steering synthesis, twirl checks,
//! bit-commitment simulation and the randomized invariant suites.
//!
//! Exit status: 0 when every check passes, 1 on a violated check, 2 on a
//! configuration or I/O error.

mod bitcommit;
mod check;
mod config;
mod report;
mod steer;
mod twirl;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use report::Format;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "steerlab", version, about = "Steering, twirl and bit-commitment experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a steering POVM and preparation instrument for a state and ensemble.
    Steer(Common),
    /// Simulate the bit-commitment protocol.
    Bitcommit(Common),
    /// Run a randomized invariant suite.
    Check(CheckArgs),
    /// Check the twirl projection on an algebra, and optionally a pinching.
    Twirl(Common),
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Clone, Debug)]
struct CheckArgs {
    /// JSON configuration file; optional when --suite is given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Suite name: operator-core, twirl, steering, instrument-locality, bitcommit.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    cases: Option<usize>,
}

/// Outcome of a command that ran to completion.
pub enum Verdict {
    Pass,
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Steer(c) => steer::run(&c),
        Command::Bitcommit(c) => bitcommit::run(&c),
        Command::Check(c) => check::run(&c),
        Command::Twirl(c) => twirl::run(&c),
    };
    match result {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("steerlab: {e}");
            ExitCode::from(2)
        }
    }
}
