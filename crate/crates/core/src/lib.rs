//! # pertcrf-core
//!
//! Linear-chain conditional random fields for Persian ezafe recognition and
//! part-of-speech tagging, together with the corpus protocol, feature
//! templates, evaluation measures and a synthetic corpus generator used to
//! check every stage at desk scale.
//!
//! The crate is `no_std` and only needs `alloc`. Reading and writing files,
//! the command-line front end and report rendering live in the `pertcrf`
//! companion crate.
#![no_std]
#![deny(missing_docs)]

extern crate alloc;

pub mod corpus;
pub mod crf;
pub mod datagen;
pub mod errors;
pub mod features;
pub mod math;
pub mod metrics;
pub mod tasks;

pub use corpus::{Corpus, Fraction, PosStatsRow, Sentence, SplitSpec, Token};
pub use crf::{CrfModel, Lattice, TrainConfig};
pub use errors::{Error, Result};
pub use features::{EzafeAnnotation, FeatureIndex, FeatureTemplate, FeatureVector, TemplateId};
pub use metrics::{ConfusionTable, Metrics};
