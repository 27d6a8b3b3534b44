//! Experiment runner for the Stokes multigrid solvers: declarative configs,
//! named suites, CSV output and a run manifest.

pub mod checks;
pub mod config;
pub mod run;
pub mod suites;

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        message: String,
    },
    #[error("unknown suite `{0}` (see `list-suites`)")]
    UnknownSuite(String),
    #[error(transparent)]
    Solver(#[from] stokes_mg::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::UnknownSuite(_) => 2,
            _ => 1,
        }
    }
}
