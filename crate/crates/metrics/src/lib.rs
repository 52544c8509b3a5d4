//! Evaluation of generated time series.
//!
//! Model-free scores ([`mse`], [`crps`], [`wasserstein`], [`frechet`]) are
//! pure functions. Model-based scores ([`discriminative_score`],
//! [`predictive_score`], [`context_fid`]) train a private evaluator per call,
//! seeded from their configuration.

pub mod contrastive;
pub mod crps;
pub mod ensemble;
pub mod error;
pub mod evaluator;
pub mod frechet;
pub mod mse;
pub mod report;
pub mod wasserstein;

pub use contrastive::{context_fid, ContrastiveConfig, ContrastiveEncoder};
pub use crps::{crps_empirical, crps_ensemble};
pub use ensemble::{ensemble_stats, quantile_sorted, EnsembleStats};
pub use error::{MetricError, Result};
pub use evaluator::{discriminative_score, predictive_score, EvaluatorConfig};
pub use frechet::{frechet_distance, gaussian_moments};
pub use mse::{masked_mse, mse};
pub use report::{MetricKind, MetricReport};
pub use wasserstein::{marginal_wasserstein, sliced_wasserstein, wasserstein_1d};
