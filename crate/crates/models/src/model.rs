//! The contract shared by every generative model.

use candle_core::Tensor;
use ndarray::Array3;
use tsgb_core::rng::Rng;
use tsgb_nn::ParamStore;

use crate::condition::{CondBatch, ConditionSpec};
use crate::config::{Geometry, ModelKind};
use crate::error::Result;

/// A normalized training or validation batch.
#[derive(Debug, Clone)]
pub struct Batch {
    /// `[B, T, D]`.
    pub x: Tensor,
    pub cond: CondBatch,
}

/// A generative model over fixed-geometry series in normalized units.
///
/// Parameters live in [`GenerativeModel::store`]; the trainer snapshots and
/// restores them there. Sampling takes `&self` and is reentrant.
pub trait GenerativeModel: Send {
    fn kind(&self) -> ModelKind;

    fn geometry(&self) -> Geometry;

    fn condition_spec(&self) -> &ConditionSpec;

    fn store(&self) -> &ParamStore;

    /// Called once with the normalized training values before the first step.
    fn prepare(&mut self, _train: &Array3<f64>) -> Result<()> {
        Ok(())
    }

    /// One optimization step; returns the training loss. `step` counts
    /// batches from the start of training.
    fn train_step(&mut self, batch: &Batch, step: usize, rng: &mut Rng) -> Result<f64>;

    /// Lower-is-better validation metric over a whole validation set.
    /// Deterministic for a fixed `rng` state.
    fn validation_metric(&self, val: &Batch, rng: &mut Rng) -> Result<f64>;

    /// One draw per condition row, `[B, T, D]` in normalized units.
    fn sample(&self, cond: &CondBatch, rng: &mut Rng) -> Result<Tensor>;

    /// Non-parameter state needed to reproduce sampling.
    fn extra_state(&self) -> serde_json::Value {
        serde_json::Value::Null
    }

    fn set_extra_state(&mut self, _state: &serde_json::Value) -> Result<()> {
        Ok(())
    }

    /// Re-creates optimizer state with a new learning rate.
    fn set_learning_rate(&mut self, lr: f64) -> Result<()>;
}
