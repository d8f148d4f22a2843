use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("failed to encode image {path}: {message}")]
    Encode { path: PathBuf, message: String },

    #[error("image has zero size")]
    EmptyImage,

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph too small: {0} nodes (need at least 2)")]
    GraphTooSmall(usize),

    #[error("partition covers {partition} nodes but graph has {graph}")]
    InconsistentPartition { partition: usize, graph: usize },

    #[error("resolution {0} is outside [0, 1]")]
    ResolutionOutOfRange(f64),

    #[error("partition has no communities")]
    EmptyPartition,

    #[error("exhaustive union search supports at most {max} communities, got {got}")]
    TooManyCommunities { got: usize, max: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset at {0} contains no usable entries")]
    EmptyDataset(PathBuf),

    #[error("cannot aggregate an empty record set")]
    EmptyRecords,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
