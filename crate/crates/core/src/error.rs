use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the clustering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("missing required parameter {0}")]
    MissingParameter(String),

    #[error("unknown {kind} `{value}`")]
    UnknownName { kind: &'static str, value: String },

    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{metric} is undefined: {reason}")]
    Undefined { metric: &'static str, reason: String },

    #[error("point {index} does not dominate the reference point")]
    NotDominatingReference { index: usize },

    #[error("stage `{stage}` failed: {cause}")]
    Stage { stage: &'static str, cause: String },

    #[error("all {n} trials failed: {modes}")]
    AllTrialsFailed { n: usize, modes: String },

    #[error("run `{0}` not found in registry")]
    RunNotFound(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
