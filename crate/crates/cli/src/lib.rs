//! File formats, reports and command implementations behind the `qctrl` binary.

pub mod commands;
pub mod pulse_file;
pub mod report;
pub mod spec_file;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] qctrl_core::Error),
}

impl CliError {
    /// Process exit status: 1 for invalid input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
