//! File formats, reports, parallel training and the command-line front end
//! for the `pertcrf-core` tagger.

#![warn(missing_docs)]

pub mod cli;
pub mod error;
pub mod format;
pub mod fsio;
pub mod parallel;
pub mod report;

pub use cli::{run, Cli};
pub use error::{CliError, CliResult};
