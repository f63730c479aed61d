//! Command-line front end and benchmark harness for `rcms-core`.
//!
//! The binary is a thin wrapper over [`run`]; everything else lives here so
//! the harness can be driven from tests.

pub mod bench;
pub mod cli;
pub mod commands;
pub mod config;
pub mod validate;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use bench::{run_sweep, BenchRow, BENCH_COLUMNS, BENCH_FORMAT, BENCH_FORMAT_VERSION};
pub use config::{ExperimentConfig, FileConfig};

/// Exit code for usage errors and failed runs.
pub const EXIT_USAGE: u8 = 1;
/// Exit code when `validate` detects an invariant violation.
pub const EXIT_VIOLATION: u8 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0} invariant violation(s) detected")]
    Violation(usize),
    #[error(transparent)]
    Core(#[from] rcms_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Violation(_) => EXIT_VIOLATION,
            _ => EXIT_USAGE,
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Parse `args` (program name first), run the command and return the exit
/// code. Help and version requests exit 0.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match cli::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
