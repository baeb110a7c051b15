use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the embedding, conformal and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training impossible: {0}")]
    TrainingImpossible(String),

    #[error("neighbor count k = {k} exceeds the {size} stored embeddings")]
    NeighborCount { k: usize, size: usize },

    #[error("empty calibration set")]
    EmptyCalibration,

    #[error("empty validation set")]
    EmptyValidation,

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("artifact format: {0}")]
    Format(String),

    #[error(
        "calibration artifact was built against training index {expected}, \
         but the supplied index has digest {actual}"
    )]
    DigestMismatch { expected: String, actual: String },

    #[error("{}:{line}: {message}", path.display())]
    Record {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: {cause}", path.display())]
    Io { path: PathBuf, cause: std::io::Error },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause,
        }
    }
}
