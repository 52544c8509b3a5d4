use thiserror::Error;

pub type Result<T, E = MetricError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("sizing error: {0}")]
    Sizing(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Tensor(#[from] candle_core::Error),

    #[error(transparent)]
    Data(#[from] tsgb_core::DataError),
}
