//! Error type shared by the CLI layers.

use swarmsim_core::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    ConfigSyntax {
        path: String,
        line: usize,
        message: String,
    },
    #[error("configuration invalid:\n{0}")]
    ConfigInvalid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("snapshot {path}: {message}")]
    Snapshot { path: String, message: String },
    #[error("step failure: {0}")]
    Step(#[from] SolverError),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for configuration problems, 2 for step failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Step(_) => 2,
            _ => 1,
        }
    }
}
