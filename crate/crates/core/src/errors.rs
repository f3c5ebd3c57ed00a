//! Error type shared by every module of the crate.

use alloc::string::String;

/// Errors raised by the tagging core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A token form was empty or contained whitespace.
    #[error("invalid token form {0:?}")]
    InvalidForm(String),

    /// A tag symbol was empty or contained whitespace.
    #[error("invalid tag symbol {0:?}")]
    InvalidTag(String),

    /// A sentence without tokens.
    #[error("sentence must contain at least one token")]
    EmptySentence,

    /// The requested split leaves one of the parts empty or is malformed.
    #[error("invalid split: {0}")]
    InvalidSplit(String),

    /// Operation needs a non-empty corpus.
    #[error("corpus is empty")]
    EmptyCorpus,

    /// Shannon index over an empty or non-positive count table.
    #[error("invalid frequency table: {0}")]
    InvalidCounts(String),

    /// A position outside the sentence was requested.
    #[error("position {position} out of range for sentence of length {len}")]
    PositionOutOfRange {
        /// Requested position.
        position: usize,
        /// Sentence length.
        len: usize,
    },

    /// Ezafe annotation does not match the sentence it annotates.
    #[error("ezafe annotation has length {got}, sentence has length {expected}")]
    AnnotationLength {
        /// Sentence length.
        expected: usize,
        /// Annotation length.
        got: usize,
    },

    /// Ezafe annotation presence disagrees with the template.
    #[error("template {template} {detail}")]
    AnnotationMismatch {
        /// Template identifier.
        template: String,
        /// What went wrong.
        detail: &'static str,
    },

    /// A flag value other than 0 or 1.
    #[error("ezafe flag must be 0 or 1, got {0}")]
    InvalidFlag(u8),

    /// A gold label unknown to the model.
    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    /// Malformed model parameters.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Invalid training configuration.
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    /// The objective stopped being finite.
    #[error("training diverged at iteration {iteration}: objective is {objective}")]
    Diverged {
        /// Iteration at which the non-finite value appeared.
        iteration: usize,
        /// The offending objective value.
        objective: f64,
    },

    /// Gold and predicted sequences do not line up.
    #[error("sentence {sentence}: {detail}")]
    Alignment {
        /// Index of the offending sentence.
        sentence: usize,
        /// Description of the mismatch.
        detail: String,
    },

    /// A tag outside the declared tag set.
    #[error("tag {0:?} is not in the tag set")]
    UnknownTag(String),

    /// Two per-tag score maps do not cover the same tags.
    #[error("tag sets differ: {0}")]
    KeyMismatch(String),

    /// A generative spec that violates its invariants.
    #[error("invalid HMM spec: {0}")]
    InvalidSpec(String),

    /// A word missing from the generative spec vocabulary.
    #[error("word {0:?} is not in the vocabulary")]
    OutOfVocabulary(String),

    /// Models that cannot be chained.
    #[error("incompatible models: {0}")]
    IncompatibleModels(String),
}

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;
