use std::path::PathBuf;

use thiserror::Error;

use crate::fixed_point::Trajectory;

/// Errors raised across the sampling, solver and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An invalid configuration value; `field` names the offending setting.
    #[error("invalid config `{field}`: {message}")]
    Config { field: String, message: String },

    /// Reported outcomes that do not match the sampler's bookkeeping.
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("runtime error: {0}")]
    Runtime(String),

    #[error("no convergence after {iterations} iterations (last delta {last_delta:e})")]
    Convergence {
        iterations: usize,
        last_delta: f64,
        trajectory: Box<Trajectory>,
    },

    #[error("checkpoint refused: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Domain(_) | Error::Checkpoint(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
