use thiserror::Error;
use tsgb_core::DataError;

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),

    #[error(transparent)]
    Data(#[from] DataError),

    #[error(transparent)]
    Metric(#[from] tsgb_metrics::MetricError),

    #[error("training diverged: non-finite {what}{}", batch.map(|b| format!(" at batch {b}")).unwrap_or_default())]
    Diverged { what: String, batch: Option<usize> },

    #[error("numerical error in layer {layer}: {reason}")]
    Numerical { layer: usize, reason: String },

    #[error("condition mismatch: model expects {expected}, got {got}")]
    ConditionMismatch { expected: String, got: String },

    #[error("model has not been trained")]
    Untrained,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ModelError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub(crate) fn diverged(what: impl Into<String>, batch: Option<usize>) -> Self {
        Self::Diverged {
            what: what.into(),
            batch,
        }
    }
}
