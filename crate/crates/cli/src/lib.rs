//! Command-line harness: scoring, reports and the command implementations
//! behind the `spidereval` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod score;
pub mod triage;

pub use error::{CliError, ExitCode};
