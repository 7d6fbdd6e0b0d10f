use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("insufficient batches: need at least 2, got {0}")]
    InsufficientBatches(usize),

    #[error("insufficient tours: need at least 2, got {0}")]
    InsufficientTours(usize),

    #[error("insufficient window: {0}")]
    InsufficientWindow(String),

    #[error("no regenerations observed")]
    NoRegenerations,

    #[error("source exhausted after {0} steps")]
    SourceExhausted(u64),

    #[error("zero transition density")]
    ZeroTransitionDensity,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite draw: {0}")]
    NonFiniteDraw(String),

    #[error("accept-reject sampler gave up after {0} proposals")]
    AcceptRejectExhausted(u64),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("malformed {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("no results in {0}")]
    NoResults(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
