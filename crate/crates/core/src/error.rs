use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate profile: k1 = {k1} must be strictly below k = {k}")]
    DegenerateProfile { k1: f64, k: f64 },

    #[error("argument {x} is outside the validity domain (must exceed {min})")]
    OutOfDomain { x: f64, min: f64 },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("pathwise invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
