use std::path::PathBuf;

use mzq_core::MzqError;
use thiserror::Error;

/// Failures of a subcommand, each with a fixed exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Certification(String),

    #[error("{} already exists (use --force to overwrite)", .0.display())]
    OutputExists(PathBuf),

    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Invalid(String),

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Certification(_) => 2,
            CliError::OutputExists(_) => 3,
            CliError::Input(_) => 4,
            CliError::Invalid(_) => 5,
        }
    }

    /// Error raised while reading the file at `path`.
    pub fn input(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }
}

impl From<MzqError> for CliError {
    fn from(err: MzqError) -> Self {
        match err {
            MzqError::NotMzLayer { .. } => CliError::Certification(err.to_string()),
            MzqError::InvalidParameter(_) | MzqError::IndexOutOfRange { .. } => CliError::Invalid(err.to_string()),
            MzqError::Json(_) => CliError::Input(err.to_string()),
            _ => CliError::Runtime(err.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
