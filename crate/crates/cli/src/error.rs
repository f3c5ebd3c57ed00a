//! Subcommand errors and their exit codes.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::format::FormatError;

/// Any failure of a subcommand, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag combinations.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or invalid input data.
    #[error("{path}: {source}")]
    Format {
        /// File being read.
        path: PathBuf,
        /// Underlying problem.
        source: FormatError,
    },
    /// File system failure.
    #[error("{path}: {source}")]
    Io {
        /// File being read or written.
        path: PathBuf,
        /// Underlying problem.
        source: io::Error,
    },
    /// Data rejected by the core library.
    #[error(transparent)]
    Data(pertcrf_core::Error),
    /// Optimizer failure.
    #[error("training failed: {0}")]
    Training(pertcrf_core::Error),
}

impl CliError {
    /// Process exit code: 1 usage, 2 data, 3 training.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Format { .. } | CliError::Io { .. } | CliError::Data(_) => 2,
            CliError::Training(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, source: FormatError) -> Self {
        CliError::Format { path: path.into(), source }
    }

    /// Maps a core error raised while training: divergence and bad optimizer
    /// settings are training failures, anything else is a data error.
    pub(crate) fn from_training(e: pertcrf_core::Error) -> Self {
        match e {
            pertcrf_core::Error::Diverged { .. } => CliError::Training(e),
            pertcrf_core::Error::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Data(other),
        }
    }
}

impl From<pertcrf_core::Error> for CliError {
    fn from(e: pertcrf_core::Error) -> Self {
        match e {
            pertcrf_core::Error::InvalidConfig(msg) | pertcrf_core::Error::InvalidSplit(msg) => CliError::Usage(msg),
            other => CliError::Data(other),
        }
    }
}

/// Result alias for subcommands.
pub type CliResult<T> = Result<T, CliError>;
