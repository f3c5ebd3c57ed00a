//! Text file formats: corpora, models, HMM specifications and experiment
//! configurations.

pub mod config;
pub mod corpus;
pub mod hmm;
pub mod model;

use thiserror::Error;

/// A problem with the contents of a file.
#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    /// Malformed line, 1-based.
    #[error("line {line}: {message}")]
    Line {
        /// Line number.
        line: usize,
        /// What is wrong.
        message: String,
    },
    /// Model file version other than 1.
    #[error("unsupported version {0:?}")]
    UnsupportedVersion(String),
    /// The file ended early.
    #[error("truncated file: {0}")]
    Truncated(String),
    /// Parsed values rejected by the core library.
    #[error(transparent)]
    Core(#[from] pertcrf_core::Error),
}

pub(crate) fn line_error(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Line { line, message: message.into() }
}
