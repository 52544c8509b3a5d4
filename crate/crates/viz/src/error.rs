use thiserror::Error;

#[derive(Debug, Error)]
pub enum VizError {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("sizing error: {0}")]
    Sizing(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("image encoding error: {0}")]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Metric(#[from] tsgb_metrics::MetricError),
}

pub type Result<T> = std::result::Result<T, VizError>;
