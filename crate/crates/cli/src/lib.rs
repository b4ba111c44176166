//! Configuration-driven front end: a TOML [`spec::RunSpec`] selects
//! parameters, grid, initial data and solver settings, and each command in
//! [`commands`] runs one pipeline and writes CSV/JSON outputs.

pub mod commands;
pub mod output;
pub mod spec;

use thiserror::Error;

pub use commands::{run_command, run_sweep, Outcome};
pub use spec::{Command, RunSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid specification: {0}")]
    Validation(String),

    #[error(transparent)]
    Solver(#[from] aggdiff::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 1 for bad input, 2 for failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Solver(aggdiff::Error::InvalidParameter(_) | aggdiff::Error::InvalidConfig(_)) => 1,
            CliError::Solver(_) | CliError::Io { .. } => 2,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
