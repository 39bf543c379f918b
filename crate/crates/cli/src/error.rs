use std::path::PathBuf;

use thiserror::Error;

/// Everything that stops a command before it can report results.
///
/// Each variant renders with its own prefix so scripts can tell a missing
/// file from a bad schema from an unknown experiment.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read file {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("config schema violation: {0}")]
    Schema(String),

    #[error("unknown experiment `{0}`; run `dperm list` for the available names")]
    UnknownExperiment(String),

    #[error("invalid config: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] dperm_core::Error),

    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },

    #[error("malformed results file: {0}")]
    Results(String),

    #[error("invalid DPERM_THREADS: {0}")]
    Threads(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}
