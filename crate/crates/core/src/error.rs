use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("label column {0} not found")]
    LabelColumnMissing(String),

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("class {class} has {count} example(s); stratified splitting needs at least 2")]
    ClassTooSmall { class: String, count: usize },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("empty feature set")]
    EmptyFeatureSet,

    #[error("feature index {index} out of range for {columns} column(s)")]
    FeatureOutOfRange { index: usize, columns: usize },

    #[error("column count mismatch: model expects {expected}, got {actual}")]
    ColumnMismatch { expected: usize, actual: usize },

    #[error("unknown {kind} id `{id}`")]
    UnknownComponent { kind: &'static str, id: String },

    #[error("invalid parameter `{param}` for `{learner}`: {reason}")]
    InvalidParam {
        learner: String,
        param: String,
        reason: String,
    },

    #[error("meta-learner `{meta}` cannot wrap `{base}`: {reason}")]
    InvalidMeta { meta: String, base: String, reason: String },

    #[error("metric inputs must be non-empty and of equal length ({0} vs {1})")]
    MetricLength(usize, usize),

    #[error("deadline exceeded")]
    DeadlineExceeded,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("statistics error: {0}")]
    Stats(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
