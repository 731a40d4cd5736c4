use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the modem, simulator, sensing and protocol layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: need {needed} samples, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("counter `{field}` went backwards ({before} -> {after})")]
    CounterWrap {
        field: &'static str,
        before: u64,
        after: u64,
    },

    #[error("cannot read {}: {source}", path.display())]
    Permission {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("resource error: {0}")]
    Resource(String),

    #[error("scheduling error: {0}")]
    Scheduling(String),

    #[error("installation id space of width {width} is exhausted")]
    Capacity { width: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
