use std::path::PathBuf;

use grfkit::{FuseError, GrfError, MaskError, MetadataError, MetricsError};
use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Ingest(String),
    #[error("{0}")]
    Validation(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input { .. } | CliError::Ingest(_) | CliError::Io { .. } => EXIT_INPUT,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn input(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Input { path: path.into(), message: message.to_string() }
    }
}

impl From<MetadataError> for CliError {
    fn from(e: MetadataError) -> Self {
        CliError::Ingest(e.to_string())
    }
}

impl From<GrfError> for CliError {
    fn from(e: GrfError) -> Self {
        match e {
            GrfError::InvalidParams(m) => CliError::Usage(m),
            other => CliError::Ingest(other.to_string()),
        }
    }
}

impl From<FuseError> for CliError {
    fn from(e: FuseError) -> Self {
        match e {
            FuseError::Shape { .. } => CliError::Validation(e.to_string()),
            other => CliError::Ingest(other.to_string()),
        }
    }
}

impl From<MaskError> for CliError {
    fn from(e: MaskError) -> Self {
        match e {
            MaskError::Image(_) => CliError::Ingest(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Io(_) | MetricsError::Json(_) => CliError::Ingest(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}
