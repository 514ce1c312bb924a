//! Command failures and their exit codes.

use std::path::PathBuf;

use crate::config::ConfigError;
use crate::score::ScoreError;

/// Process exit codes.
///
/// | code | meaning |
/// |---:|---|
/// | 0 | success |
/// | 1 | other failure (I/O, harness fault) |
/// | 2 | command-line usage error |
/// | 3 | invalid or unreadable config, missing API key |
/// | 4 | dataset cannot be loaded |
/// | 5 | unknown database id |
/// | 6 | model endpoint unreachable after retries |
/// | 7 | transcripts missing, duplicated or foreign to the dataset |
/// | 8 | replay store has no response for a request |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Failure = 1,
    Usage = 2,
    Config = 3,
    Dataset = 4,
    UnknownDatabase = 5,
    Network = 6,
    Transcripts = 7,
    ReplayMiss = 8,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    MissingApiKey(String),
    #[error(transparent)]
    Dataset(#[from] spidereval_core::dataset::DatasetError),
    #[error("unknown database {0:?}")]
    UnknownDatabase(String),
    #[error("{0} example(s) failed: model endpoint unreachable after retries")]
    Network(usize),
    #[error("{0} request(s) had no recorded response in the replay store")]
    ReplayMiss(usize),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Transcript(#[from] spidereval_pipeline::transcript::TranscriptError),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::MissingApiKey(_) => ExitCode::Config,
            CliError::Dataset(_) => ExitCode::Dataset,
            CliError::UnknownDatabase(_) => ExitCode::UnknownDatabase,
            CliError::Network(_) => ExitCode::Network,
            CliError::ReplayMiss(_) => ExitCode::ReplayMiss,
            CliError::Score(_) => ExitCode::Transcripts,
            CliError::Transcript(_) | CliError::Io { .. } | CliError::Other(_) => ExitCode::Failure,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
