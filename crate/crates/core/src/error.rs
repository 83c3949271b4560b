use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate out of range, row {row}: {value} not in [0, 1]")]
    OutOfRange { row: usize, value: f64 },

    #[error("duplicate rows {first} and {second}")]
    DuplicateRow { first: usize, second: usize },

    #[error("non-finite coordinate at row {row}")]
    NonFinite { row: usize },

    #[error("empty design or batch")]
    Empty,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row {row} has {got} columns, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension {requested} exceeds the direction-number table ({available} dimensions)")]
    SobolDimension { requested: usize, available: usize },

    #[error("cholesky factorization failed after nugget escalation to {nugget:e}")]
    Factorization { nugget: f64 },

    #[error("ill-conditioned model: negative predictive variance {0:e}")]
    IllConditioned(f64),

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("i/o error on {path}: {source}")]
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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
