use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("audio error: {0}")]
    Audio(String),

    #[error("NPY format error: {0}")]
    Npy(String),

    #[error("model file error: {0}")]
    Model(String),

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u64, expected: u64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("degenerate clustering: {0}")]
    DegenerateClustering(String),

    #[error("missing rhythm model: {0}")]
    MissingModel(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
