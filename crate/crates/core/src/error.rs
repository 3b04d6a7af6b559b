use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the descriptor, detection and matching pipelines.
#[derive(Debug, Error)]
pub enum DascError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("non-finite value in {stage} at pixel ({x}, {y})")]
    NonFinite {
        stage: &'static str,
        x: usize,
        y: usize,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, DascError>;

impl DascError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DascError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        DascError::Parameter(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        DascError::Dimension(msg.into())
    }
}
