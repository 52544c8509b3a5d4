//! Vanilla generative models for fixed-length multivariate series:
//! a β-VAE, a gradient-penalty Wasserstein GAN, a transformer DDPM and a
//! masked autoregressive flow, with class, history and mask conditioning.

pub mod condition;
pub mod config;
pub mod ddpm;
pub mod error;
pub mod fitted;
pub mod gan;
pub mod gradcheck;
pub mod maf;
pub mod model;
pub mod trainer;
mod util;
pub mod vae;

pub use candle_core::DType;
pub use condition::{CondBatch, Condition, ConditionEncoder, ConditionSpec};
pub use config::{
    DdpmConfig, GanConfig, Geometry, MafConfig, ModelConfig, ModelKind, Prediction, ScheduleKind, TrainerConfig,
    VaeConfig,
};
pub use ddpm::{Ddpm, NoiseSchedule};
pub use error::{ModelError, Result};
pub use fitted::{build_model, FittedModel};
pub use gan::Gan;
pub use gradcheck::{gradcheck, GradcheckReport};
pub use maf::Maf;
pub use model::{Batch, GenerativeModel};
pub use trainer::{ConditionData, EarlyStopping, Prepared, TrainData, TrainingLog};
pub use util::{rand_uniform, randn};
pub use vae::Vae;
