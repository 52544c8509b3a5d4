//! Epoch loop with early stopping on a validation metric.

use candle_core::{DType, Device, Tensor};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use tsgb_core::rng::{derive_seed, seeded, Rng};
use tsgb_core::{Scaler, SeriesSet};
use tsgb_nn::array3_to_tensor;

use crate::condition::{class_ids, CondBatch, ConditionSpec};
use crate::config::{Geometry, TrainerConfig};
use crate::error::{ModelError, Result};
use crate::model::{Batch, GenerativeModel};

/// Conditioning attached to a training or validation set.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionData {
    None,
    Class(Vec<usize>),
    /// Preceding windows aligned row-for-row with the series.
    History(SeriesSet),
    /// Missing entries are simulated with this rate for every batch.
    Mask { rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainData {
    pub series: SeriesSet,
    pub condition: ConditionData,
}

impl TrainData {
    pub fn unconditional(series: SeriesSet) -> Self {
        Self {
            series,
            condition: ConditionData::None,
        }
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn geometry(&self) -> Geometry {
        Geometry::new(self.series.len_t(), self.series.n_features())
    }

    /// Checks the data against a condition spec.
    pub fn check(&self, spec: &ConditionSpec) -> Result<()> {
        let n = self.len();
        match (spec, &self.condition) {
            (ConditionSpec::None, ConditionData::None) => Ok(()),
            (ConditionSpec::Class { n_classes }, ConditionData::Class(labels)) => {
                if labels.len() != n {
                    return Err(ModelError::config(format!("{} labels for {n} series", labels.len())));
                }
                if labels.iter().any(|&l| l >= *n_classes) {
                    return Err(ModelError::config("label outside the declared class count"));
                }
                Ok(())
            }
            (ConditionSpec::History { length }, ConditionData::History(h)) => {
                if h.len() != n || h.len_t() != *length || h.n_features() != self.series.n_features() {
                    return Err(ModelError::config("history windows do not align with the series"));
                }
                Ok(())
            }
            (ConditionSpec::Mask, ConditionData::Mask { rate }) => {
                if !(*rate > 0.0 && *rate < 1.0) {
                    return Err(ModelError::config(format!("missing rate {rate} outside (0, 1)")));
                }
                Ok(())
            }
            (spec, _) => Err(ModelError::ConditionMismatch {
                expected: spec.to_string(),
                got: match &self.condition {
                    ConditionData::None => "none",
                    ConditionData::Class(_) => "class",
                    ConditionData::History(_) => "history",
                    ConditionData::Mask { .. } => "mask",
                }
                .into(),
            }),
        }
    }
}

enum CondSource {
    None,
    Class(Tensor),
    History(Tensor),
    Mask(f64),
}

/// Normalized tensors for a dataset, ready for batching.
pub struct Prepared {
    x: Tensor,
    cond: CondSource,
    n: usize,
}

impl Prepared {
    pub fn new(data: &TrainData, scaler: &Scaler, dtype: DType) -> Result<Self> {
        let dev = Device::Cpu;
        let x = array3_to_tensor(&scaler.apply_array(data.series.values())?, dtype, &dev)?;
        let cond = match &data.condition {
            ConditionData::None => CondSource::None,
            ConditionData::Class(l) => CondSource::Class(class_ids(l, &dev)?),
            ConditionData::History(h) => {
                CondSource::History(array3_to_tensor(&scaler.apply_array(h.values())?, dtype, &dev)?)
            }
            ConditionData::Mask { rate } => CondSource::Mask(*rate),
        };
        Ok(Self {
            x,
            cond,
            n: data.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn values(&self) -> &Tensor {
        &self.x
    }

    /// Batch of the given rows; masks for imputation data come from `rng`.
    pub fn batch(&self, rows: &[usize], rng: &mut Rng) -> Result<Batch> {
        let ids: Vec<u32> = rows.iter().map(|&r| r as u32).collect();
        let ids = Tensor::from_vec(ids, rows.len(), self.x.device())?;
        let x = self.x.index_select(&ids, 0)?;
        let cond = match &self.cond {
            CondSource::None => CondBatch::None(rows.len()),
            CondSource::Class(t) => CondBatch::Class(t.index_select(&ids, 0)?),
            CondSource::History(t) => CondBatch::History(t.index_select(&ids, 0)?),
            CondSource::Mask(rate) => {
                let bits: Vec<f64> = (0..x.elem_count())
                    .map(|_| if rng.random_bool(*rate) { 0.0 } else { 1.0 })
                    .collect();
                let mask = Tensor::from_vec(bits, x.dims(), x.device())?.to_dtype(x.dtype())?;
                CondBatch::Masked {
                    observed: (&x * &mask)?,
                    mask,
                }
            }
        };
        Ok(Batch { x, cond })
    }

    pub fn all(&self, rng: &mut Rng) -> Result<Batch> {
        let rows: Vec<usize> = (0..self.n).collect();
        self.batch(&rows, rng)
    }
}

/// Early-stopping bookkeeping over strictly improving validation values.
///
/// Training halts at `min(best_epoch + patience, max_epochs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    max_epochs: usize,
    best: f64,
    best_epoch: usize,
    epoch: usize,
}

/// Outcome of observing one epoch's validation value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize, max_epochs: usize) -> Self {
        Self {
            patience,
            max_epochs,
            best: f64::INFINITY,
            best_epoch: 0,
            epoch: 0,
        }
    }

    pub fn observe(&mut self, value: f64) -> Progress {
        self.epoch += 1;
        let improved = value < self.best;
        if improved {
            self.best = value;
            self.best_epoch = self.epoch;
        }
        let stop = self.epoch >= self.max_epochs || self.epoch >= self.best_epoch + self.patience;
        Progress { improved, stop }
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// Epoch at which a trace of validation values stops training.
    pub fn stop_epoch(patience: usize, max_epochs: usize, trace: impl IntoIterator<Item = f64>) -> usize {
        let mut es = Self::new(patience, max_epochs);
        for v in trace {
            if es.observe(v).stop {
                break;
            }
        }
        es.epoch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub metric: String,
    pub train_loss: Vec<f64>,
    pub val_metric: Vec<f64>,
    pub best_epoch: usize,
    pub stop_epoch: usize,
    pub best_value: f64,
}

impl TrainingLog {
    pub fn empty(metric: &str) -> Self {
        Self {
            metric: metric.to_owned(),
            train_loss: Vec::new(),
            val_metric: Vec::new(),
            best_epoch: 0,
            stop_epoch: 0,
            best_value: f64::NAN,
        }
    }
}

pub(crate) fn validation_rng(seed: u64) -> Rng {
    seeded(derive_seed(seed, "validation"))
}

/// Evaluates the model's validation metric with the fixed validation stream.
pub(crate) fn evaluate(model: &dyn GenerativeModel, val: &Prepared, seed: u64) -> Result<f64> {
    let mut rng = validation_rng(seed);
    let batch = val.all(&mut rng)?;
    let v = model.validation_metric(&batch, &mut rng)?;
    if !v.is_finite() {
        return Err(ModelError::diverged(format!("validation {}", model.kind().validation_metric()), None));
    }
    Ok(v)
}

/// Trains in place and restores the best-validation parameters.
pub(crate) fn run(
    model: &mut dyn GenerativeModel,
    train: &Prepared,
    val: &Prepared,
    cfg: &TrainerConfig,
    seed: u64,
) -> Result<TrainingLog> {
    if val.is_empty() {
        return Err(ModelError::config("validation set is empty"));
    }
    if train.is_empty() {
        return Err(ModelError::config("training set is empty"));
    }
    let mut rng = seeded(derive_seed(seed, "batches"));
    let mut stopper = EarlyStopping::new(cfg.patience, cfg.max_epochs);
    let mut log = TrainingLog::empty(model.kind().validation_metric());
    let mut best = model.store().snapshot()?;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut step = 0;
    loop {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut count = 0;
        for rows in order.chunks(cfg.batch_size) {
            let batch = train.batch(rows, &mut rng)?;
            total += model.train_step(&batch, step, &mut rng)? * rows.len() as f64;
            count += rows.len();
            step += 1;
        }
        log.train_loss.push(total / count as f64);
        let v = evaluate(model, val, seed)?;
        log.val_metric.push(v);
        let progress = stopper.observe(v);
        if progress.improved {
            best = model.store().snapshot()?;
        }
        log::debug!(
            "{} epoch {}: train {:.5} val {:.5}",
            model.kind().name(),
            stopper.epoch(),
            total / count as f64,
            v
        );
        if progress.stop {
            break;
        }
    }
    model.store().restore(&best)?;
    log.best_epoch = stopper.best_epoch();
    log.stop_epoch = stopper.epoch();
    log.best_value = stopper.best();
    Ok(log)
}
