//! Experiment drivers behind the `fogna` command-line tool.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{origin}: {message}")]
    Config { origin: String, message: String },
    #[error(transparent)]
    Core(#[from] fogna::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{failed} of {total} rows failed")]
    Partial { failed: usize, total: usize },
}

impl CliError {
    /// 2 for bad invocations or configs, 1 for failed computations.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
