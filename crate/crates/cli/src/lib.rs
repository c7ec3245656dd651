//! Command-line front end: configuration parsing, subcommand dispatch, and
//! JSON/CSV report writing.

pub mod config;
pub mod records;
pub mod selftest;

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::run_parsed;
pub use config::{parse_config, parse_config_file, ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Solver(#[from] muskat_core::Error),
    #[error("self-test failed: {0}")]
    SelfTest(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(e)
                if e.is_convergence_failure()
                    || matches!(e, muskat_core::Error::ResidualExceedsTol { .. }) =>
            {
                EXIT_SOLVER
            }
            CliError::SelfTest(_) => EXIT_SOLVER,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "muskat", version, about = "Muskat traveling-wave and stability solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the steady traveling wave.
    Tw(SolveArgs),
    /// Evolve a perturbation of a traveling wave.
    Evolve(RunArgs),
    /// Solve the linearized system from a data file.
    Linear(LinearArgs),
    /// Apply the Dirichlet-Neumann operator, or run its self-test.
    Dn(DnArgs),
    /// Dyadic block table and norms of a field.
    Norms(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `[output] directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(value_parser = ["solve"])]
    pub action: Option<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct LinearArgs {
    #[arg(value_parser = ["solve"])]
    pub action: Option<String>,
    #[command(flatten)]
    pub run: RunArgs,
    /// Overrides `[linear] data`.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DnArgs {
    #[arg(value_parser = ["selftest"])]
    pub action: Option<String>,
    #[arg(long)]
    pub selftest: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the subcommand, and returns the
/// process exit code. Errors go to standard error.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_parsed(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("muskat: {e}");
            e.exit_code()
        }
    }
}
