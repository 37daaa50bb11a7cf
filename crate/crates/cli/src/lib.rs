//! Command-line driver: analyze a parameter, check or solve a sequence,
//! run the separation ledger and the level walk.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use nestlab::combinatorics::{CombError, Violation};
use nestlab::FamilySign;
use thiserror::Error;

pub use commands::{cmd_analyze, cmd_check, cmd_ledger, cmd_solve, cmd_walk, Report};
pub use config::{OutputFormat, RunConfig, Settings};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Unexpected internal failure.
    pub const INTERNAL: i32 = 1;
    /// The parameters do not give a bimodal cubic.
    pub const NOT_BIMODAL: i32 = 2;
    /// The nest stopped because the map left class G or had a central return.
    pub const NOT_IN_CLASS_G: i32 = 3;
    pub const PRECISION_EXHAUSTED: i32 = 4;
    pub const INADMISSIBLE: i32 = 5;
    pub const NOT_FOUND: i32 = 6;
    /// Bad command line, config file or sequence syntax.
    pub const USAGE: i32 = 64;
    pub const IO: i32 = 74;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Syntax(#[from] CombError),
    #[error("not a bimodal cubic: {0}")]
    NotBimodal(String),
    #[error("not in class G: {0}")]
    NotInClassG(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("sequence is not admissible: {0}")]
    Inadmissible(Violation),
    #[error("{0}")]
    NotFound(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Syntax(_) => exit::USAGE,
            CliError::NotBimodal(_) => exit::NOT_BIMODAL,
            CliError::NotInClassG(_) => exit::NOT_IN_CLASS_G,
            CliError::PrecisionExhausted(_) => exit::PRECISION_EXHAUSTED,
            CliError::Inadmissible(_) => exit::INADMISSIBLE,
            CliError::NotFound(_) => exit::NOT_FOUND,
            CliError::Io(_) | CliError::Csv(_) => exit::IO,
            CliError::Internal(_) => exit::INTERNAL,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "nestlab", version, about = "Renormalization nests of bimodal cubic maps")]
pub struct Cli {
    #[command(flatten)]
    pub settings: Settings,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the nest of a map and print its per-level table
    Analyze {
        /// Leading coefficient a
        #[arg(allow_hyphen_values = true)]
        a: String,
        /// Quadratic coefficient b (default: the symmetric slice b = -3a/2)
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long, default_value = "positive")]
        family: FamilySign,
    },
    /// Check a sequence such as "A+,2,1;B-,2,1" for admissibility
    Check { sequence: String },
    /// Find a symmetric parameter realizing a sequence
    Solve {
        sequence: String,
        #[arg(long, default_value = "positive")]
        family: FamilySign,
    },
    /// Run the separation ledger along a sequence
    Ledger {
        sequence: String,
        /// Skip the admissibility check and run the sequence as declared
        #[arg(long)]
        unchecked: bool,
    },
    /// Simulate the level walk of a map
    Walk {
        #[arg(allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long, default_value = "positive")]
        family: FamilySign,
        /// Also write the per-step CSV here
        #[arg(long)]
        trajectories: Option<PathBuf>,
    },
}

pub fn execute(cli: Cli) -> Result<(Report, RunConfig), CliError> {
    let cfg = RunConfig::resolve(cli.settings)?;
    let report = match &cli.command {
        Command::Analyze { a, b, family } => cmd_analyze(*family, a, b.as_deref(), &cfg)?,
        Command::Check { sequence } => cmd_check(sequence, &cfg)?,
        Command::Solve { sequence, family } => cmd_solve(sequence, *family, &cfg)?,
        Command::Ledger { sequence, unchecked } => cmd_ledger(sequence, !*unchecked, &cfg)?,
        Command::Walk { a, b, family, trajectories } => {
            cmd_walk(*family, a, b.as_deref(), &cfg, trajectories.as_deref())?
        }
    };
    Ok((report, cfg))
}

fn emit(report: &Report, cfg: &RunConfig) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, &report.body)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(report.body.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the exit code. Diagnostics go
/// to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    let result = execute(cli).and_then(|(report, cfg)| emit(&report, &cfg).map(|()| report));
    match result {
        Ok(report) => {
            if let Some(w) = &report.warning {
                eprintln!("nestlab: {w}");
            }
            report.exit_code
        }
        Err(e) => {
            eprintln!("nestlab: {e}");
            e.exit_code()
        }
    }
}
