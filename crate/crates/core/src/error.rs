use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DataError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("sizing error: {0}")]
    Sizing(String),

    #[error("ingestion error at row {row}, column '{column}': {reason}")]
    Cell {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("ingestion error in {path}: {reason}")]
    Ingestion { path: PathBuf, reason: String },

    #[error("invalid series: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DataError {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Self::Parameter(msg.into())
    }

    pub fn sizing(msg: impl Into<String>) -> Self {
        Self::Sizing(msg.into())
    }
}
