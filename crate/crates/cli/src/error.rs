use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the command-line layer.
///
/// Exit codes: domain problems exit 1, environment and parse problems exit 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(#[from] tapevar::Error),

    /// Input parsed fine but violates a data rule.
    #[error("{0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Write(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) | CliError::Invalid(_) => 1,
            CliError::Io { .. } | CliError::Parse(_) | CliError::Csv(_) | CliError::Json(_) | CliError::Write(_) => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
