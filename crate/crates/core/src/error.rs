use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum ScnError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, col {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    #[error("empty data: {0}")]
    Empty(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate candidate: {0}")]
    Degenerate(String),

    #[error("training aborted: {0}")]
    TrainingAborted(String),

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl ScnError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ScnError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ScnError>;
