//! Fitted models: training entry point, sampling in data units, checkpoints.

use std::fs;
use std::path::Path;

use candle_core::DType;
use ndarray::Array3;
use serde::{Deserialize, Serialize};
use tsgb_core::rng::{derive_seed, seeded};
use tsgb_core::{Scaler, SeriesSet};
use tsgb_nn::tensor_to_array3;

use crate::condition::{Condition, ConditionSpec};
use crate::config::{Geometry, ModelConfig, TrainerConfig};
use crate::ddpm::Ddpm;
use crate::error::{ModelError, Result};
use crate::gan::Gan;
use crate::maf::Maf;
use crate::model::GenerativeModel;
use crate::trainer::{self, Prepared, TrainData, TrainingLog};
use crate::vae::Vae;

pub const CHECKPOINT_VERSION: u32 = 1;
const CHECKPOINT_JSON: &str = "checkpoint.json";
const CHECKPOINT_PARAMS: &str = "params.safetensors";

/// Instantiates a model with freshly initialized parameters.
pub fn build_model(
    config: &ModelConfig,
    geometry: Geometry,
    spec: &ConditionSpec,
    seed: u64,
    dtype: DType,
) -> Result<Box<dyn GenerativeModel>> {
    config.validate()?;
    if geometry.length == 0 || geometry.features == 0 {
        return Err(ModelError::config("geometry must be non-empty"));
    }
    Ok(match config {
        ModelConfig::Vae(c) => Box::new(Vae::new(c.clone(), geometry, spec, seed, dtype)?),
        ModelConfig::Gan(c) => Box::new(Gan::new(c.clone(), geometry, spec, seed, dtype)?),
        ModelConfig::Ddpm(c) => Box::new(Ddpm::new(c.clone(), geometry, spec, seed, dtype)?),
        ModelConfig::Maf(c) => Box::new(Maf::new(c.clone(), geometry, spec, seed, dtype)?),
    })
}

fn dtype_name(d: DType) -> &'static str {
    match d {
        DType::F64 => "f64",
        _ => "f32",
    }
}

fn parse_dtype(s: &str) -> Result<DType> {
    match s {
        "f32" => Ok(DType::F32),
        "f64" => Ok(DType::F64),
        other => Err(ModelError::config(format!("unsupported dtype '{other}'"))),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointMeta {
    version: u32,
    model: ModelConfig,
    geometry: Geometry,
    condition: ConditionSpec,
    trainer: TrainerConfig,
    scaler: Scaler,
    dtype: String,
    model_seed: u64,
    extra: serde_json::Value,
    log: TrainingLog,
}

/// A model with its scaler and training record.
pub struct FittedModel {
    model: Box<dyn GenerativeModel>,
    config: ModelConfig,
    trainer: TrainerConfig,
    scaler: Scaler,
    log: TrainingLog,
    model_seed: u64,
    trained: bool,
}

impl std::fmt::Debug for FittedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FittedModel")
            .field("model", &self.config.kind())
            .field("geometry", &self.model.geometry())
            .field("trained", &self.trained)
            .finish()
    }
}

impl FittedModel {
    /// Builds an untrained model and fits the scaler on `train`.
    pub fn initialize(
        config: &ModelConfig,
        spec: &ConditionSpec,
        train: &TrainData,
        trainer: &TrainerConfig,
        dtype: DType,
    ) -> Result<Self> {
        trainer.validate()?;
        train.check(spec)?;
        if train.is_empty() {
            return Err(ModelError::config("training set is empty"));
        }
        let scaler = Scaler::fit(&train.series, trainer.scaler)?;
        let model_seed = derive_seed(trainer.seed, config.kind().name());
        let mut model = build_model(config, train.geometry(), spec, model_seed, dtype)?;
        if let Some(lr) = trainer.lr {
            model.set_learning_rate(lr)?;
        }
        model.prepare(&scaler.apply_array(train.series.values())?)?;
        Ok(Self {
            model,
            config: config.clone(),
            trainer: trainer.clone(),
            scaler,
            log: TrainingLog::empty(config.kind().validation_metric()),
            model_seed,
            trained: false,
        })
    }

    /// Trains with early stopping and restores the best-validation parameters.
    pub fn fit(
        config: &ModelConfig,
        spec: &ConditionSpec,
        train: &TrainData,
        val: &TrainData,
        trainer: &TrainerConfig,
    ) -> Result<Self> {
        Self::fit_with_dtype(config, spec, train, val, trainer, DType::F32)
    }

    pub fn fit_with_dtype(
        config: &ModelConfig,
        spec: &ConditionSpec,
        train: &TrainData,
        val: &TrainData,
        trainer: &TrainerConfig,
        dtype: DType,
    ) -> Result<Self> {
        if val.is_empty() {
            return Err(ModelError::config("validation set is empty"));
        }
        val.check(spec)?;
        if val.geometry() != train.geometry() {
            return Err(ModelError::config("train and validation geometries differ"));
        }
        let mut fitted = Self::initialize(config, spec, train, trainer, dtype)?;
        let train_p = Prepared::new(train, &fitted.scaler, dtype)?;
        let val_p = Prepared::new(val, &fitted.scaler, dtype)?;
        fitted.log = trainer::run(fitted.model.as_mut(), &train_p, &val_p, trainer, fitted.model_seed)?;
        fitted.trained = true;
        Ok(fitted)
    }

    pub fn model(&self) -> &dyn GenerativeModel {
        self.model.as_ref()
    }

    pub fn model_mut(&mut self) -> &mut dyn GenerativeModel {
        self.model.as_mut()
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn trainer_config(&self) -> &TrainerConfig {
        &self.trainer
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn log(&self) -> &TrainingLog {
        &self.log
    }

    pub fn geometry(&self) -> Geometry {
        self.model.geometry()
    }

    pub fn condition_spec(&self) -> &ConditionSpec {
        self.model.condition_spec()
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    /// Normalized tensors of a dataset under this model's scaler.
    pub fn prepare(&self, data: &TrainData) -> Result<Prepared> {
        data.check(self.condition_spec())?;
        Prepared::new(data, &self.scaler, self.model.store().dtype())
    }

    /// Validation metric under the same fixed stream the trainer used.
    pub fn validation_metric(&self, val: &TrainData) -> Result<f64> {
        let p = self.prepare(val)?;
        trainer::evaluate(self.model.as_ref(), &p, self.model_seed)
    }

    /// `n_samples` draws per condition row, shaped `[n_samples·B, T, D]`
    /// with row `k·B + b` the `k`-th draw for condition row `b`.
    pub fn sample(&self, n_samples: usize, cond: &Condition, seed: u64) -> Result<SeriesSet> {
        if !self.trained {
            return Err(ModelError::Untrained);
        }
        self.sample_unchecked(n_samples, cond, seed)
    }

    /// Like [`FittedModel::sample`] but also allowed before training, for
    /// untrained baselines.
    pub fn sample_unchecked(&self, n_samples: usize, cond: &Condition, seed: u64) -> Result<SeriesSet> {
        let g = self.geometry();
        cond.check(self.condition_spec(), g)?;
        let rows = n_samples * cond.len();
        if rows == 0 {
            return Ok(SeriesSet::new_allow_empty(Array3::zeros((0, g.length, g.features)))?);
        }
        let store = self.model.store();
        let batch = cond.to_batch(&self.scaler, store.dtype(), store.device())?.repeat(n_samples)?;
        let mut rng = seeded(seed);
        let out = self.model.sample(&batch, &mut rng)?;
        let values = self.scaler.invert_array(&tensor_to_array3(&out)?)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::diverged("samples", None));
        }
        Ok(SeriesSet::new(values)?)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let store = self.model.store();
        let meta = CheckpointMeta {
            version: CHECKPOINT_VERSION,
            model: self.config.clone(),
            geometry: self.geometry(),
            condition: self.condition_spec().clone(),
            trainer: self.trainer.clone(),
            scaler: self.scaler.clone(),
            dtype: dtype_name(store.dtype()).into(),
            model_seed: self.model_seed,
            extra: self.model.extra_state(),
            log: self.log.clone(),
        };
        fs::write(dir.join(CHECKPOINT_JSON), serde_json::to_string_pretty(&meta)?)?;
        store.save(dir.join(CHECKPOINT_PARAMS))?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta: CheckpointMeta = serde_json::from_str(&fs::read_to_string(dir.join(CHECKPOINT_JSON))?)?;
        if meta.version != CHECKPOINT_VERSION {
            return Err(ModelError::config(format!(
                "checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
                meta.version
            )));
        }
        let dtype = parse_dtype(&meta.dtype)?;
        let mut model = build_model(&meta.model, meta.geometry, &meta.condition, meta.model_seed, dtype)?;
        model.store().load(dir.join(CHECKPOINT_PARAMS))?;
        model.set_extra_state(&meta.extra)?;
        Ok(Self {
            model,
            config: meta.model,
            trainer: meta.trainer,
            scaler: meta.scaler,
            log: meta.log,
            model_seed: meta.model_seed,
            trained: true,
        })
    }
}
