use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} attributes, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid class label {label} (expected 1..={max})")]
    InvalidLabel { label: u32, max: u32 },

    #[error("cannot merge granules labeled {0:?} and {1:?}")]
    LabelConflict(Option<u32>, Option<u32>),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("chart model is frozen (batch mode); streaming updates are not allowed")]
    FrozenChart,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed dataset: {0}")]
    Dataset(String),

    #[error("I/O error on {path}: {source}")]
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

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}
