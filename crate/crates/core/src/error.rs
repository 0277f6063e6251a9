use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to decode audio: {0}")]
    Decode(String),

    #[error("audio input is empty")]
    EmptyInput,

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("class {class} has {count} samples; at least 2 are required")]
    UnderpopulatedClass { class: String, count: usize },

    #[error("covariance is degenerate even with regularization {epsilon:e}")]
    DegenerateData { epsilon: f64 },

    #[error("unsupported model schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("data leakage: {count} test window(s) present in {context}")]
    Leakage { count: usize, context: String },

    #[error("need at least {required} patients, found {found}")]
    InsufficientPatients { required: usize, found: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
