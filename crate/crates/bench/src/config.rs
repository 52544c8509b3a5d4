//! Run configuration, protocol defaults and the config hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tsgb_core::rng::derive_seed;
use tsgb_core::{SplitSpec, Spiral2DParams};
use tsgb_metrics::{ContrastiveConfig, EvaluatorConfig, MetricKind};
use tsgb_models::{ModelConfig, TrainerConfig};

use crate::error::{BenchError, Result};

pub const PROTOCOL_LENGTH: usize = 24;
pub const PROTOCOL_MAX_FEATURES: usize = 16;
pub const PROTOCOL_L_OBS: usize = 96;
pub const PROTOCOL_L_PRED: usize = 96;
pub const PROTOCOL_MISSING_RATE: f64 = 0.2;
pub const DEFAULT_DRAWS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Synthesis,
    ClassSynthesis,
    Forecasting,
    Imputation,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Synthesis => "synthesis",
            Task::ClassSynthesis => "class_synthesis",
            Task::Forecasting => "forecasting",
            Task::Imputation => "imputation",
        }
    }

    pub fn default_metrics(self) -> Vec<MetricKind> {
        match self {
            Task::Synthesis | Task::ClassSynthesis => vec![
                MetricKind::ContextFid,
                MetricKind::Wasserstein,
                MetricKind::PredictiveScore,
                MetricKind::DiscriminativeScore,
            ],
            Task::Forecasting | Task::Imputation => vec![MetricKind::Mse, MetricKind::Crps],
        }
    }

    pub fn supports(self, metric: MetricKind) -> bool {
        let distributional = matches!(
            metric,
            MetricKind::ContextFid
                | MetricKind::Wasserstein
                | MetricKind::SlicedWasserstein
                | MetricKind::PredictiveScore
                | MetricKind::DiscriminativeScore
        );
        match self {
            Task::Synthesis | Task::ClassSynthesis => distributional,
            Task::Forecasting | Task::Imputation => !distributional,
        }
    }
}

/// Where the data comes from. Simulators generate windows of the run length
/// directly; CSV records are windowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Spiral2d {
        n_samples: usize,
        #[serde(default = "default_spiral_noise")]
        noise_std: f64,
        #[serde(default)]
        seed: u64,
    },
    SineNd {
        n_samples: usize,
        dims: usize,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        name: String,
        path: PathBuf,
        #[serde(default)]
        columns: Option<Vec<String>>,
        #[serde(default)]
        timestamp_column: Option<String>,
        #[serde(default = "default_stride")]
        stride: usize,
    },
}

fn default_spiral_noise() -> f64 {
    Spiral2DParams::new(1, 2, 0).noise_std
}

fn default_stride() -> usize {
    1
}

impl DatasetSpec {
    pub fn name(&self) -> String {
        match self {
            DatasetSpec::Spiral2d { .. } => "Spiral2D".into(),
            DatasetSpec::SineNd { .. } => "SineND".into(),
            DatasetSpec::Csv { name, .. } => name.clone(),
        }
    }

    pub fn is_labeled(&self) -> bool {
        matches!(self, DatasetSpec::Spiral2d { .. })
    }

    /// Resolve a relative CSV path against the config file's directory.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let DatasetSpec::Csv { path, .. } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

/// Window geometry. Unset fields take the protocol value for the task.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySpec {
    pub length: Option<usize>,
    pub max_features: Option<usize>,
    pub l_obs: Option<usize>,
    pub l_pred: Option<usize>,
    pub missing_rate: Option<f64>,
}

/// Geometry after protocol defaults are applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedGeometry {
    /// Window length the model generates.
    pub length: usize,
    pub max_features: usize,
    pub l_obs: Option<usize>,
    pub missing_rate: Option<f64>,
}

impl ResolvedGeometry {
    /// Length of the raw windows cut from the dataset.
    pub fn window(&self) -> usize {
        self.length + self.l_obs.unwrap_or(0)
    }
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

fn default_projections() -> usize {
    64
}

fn default_split() -> SplitSpec {
    SplitSpec::shuffled(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub task: Task,
    pub model: ModelConfig,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default = "default_split")]
    pub split: SplitSpec,
    #[serde(default = "default_draws")]
    pub n_draws: usize,
    /// Defaults to the task's standard metric set.
    #[serde(default)]
    pub metrics: Option<Vec<MetricKind>>,
    /// Caps the number of test windows scored.
    #[serde(default)]
    pub max_test_samples: Option<usize>,
    #[serde(default)]
    pub evaluator: EvaluatorConfig,
    #[serde(default)]
    pub contrastive: ContrastiveConfig,
    #[serde(default = "default_projections")]
    pub sliced_projections: usize,
    #[serde(default)]
    pub seed: u64,
    /// Permit geometry that departs from the protocol.
    #[serde(default, rename = "override")]
    pub allow_override: bool,
}

impl RunConfig {
    pub fn new(dataset: DatasetSpec, task: Task, model: ModelConfig) -> Self {
        Self {
            dataset,
            task,
            model,
            geometry: GeometrySpec::default(),
            trainer: TrainerConfig::default(),
            split: default_split(),
            n_draws: DEFAULT_DRAWS,
            metrics: None,
            max_test_samples: None,
            evaluator: EvaluatorConfig::default(),
            contrastive: ContrastiveConfig::default(),
            sliced_projections: default_projections(),
            seed: 0,
            allow_override: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| BenchError::config(format!("invalid run config: {e}")))
    }

    /// Reads a config file; relative dataset paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            cfg.dataset.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn metrics(&self) -> Vec<MetricKind> {
        self.metrics.clone().unwrap_or_else(|| self.task.default_metrics())
    }

    pub fn resolved_geometry(&self) -> ResolvedGeometry {
        let g = &self.geometry;
        match self.task {
            Task::Forecasting => ResolvedGeometry {
                length: g.l_pred.unwrap_or(PROTOCOL_L_PRED),
                max_features: g.max_features.unwrap_or(PROTOCOL_MAX_FEATURES),
                l_obs: Some(g.l_obs.unwrap_or(PROTOCOL_L_OBS)),
                missing_rate: None,
            },
            Task::Imputation => ResolvedGeometry {
                length: g.length.unwrap_or(PROTOCOL_LENGTH),
                max_features: g.max_features.unwrap_or(PROTOCOL_MAX_FEATURES),
                l_obs: None,
                missing_rate: Some(g.missing_rate.unwrap_or(PROTOCOL_MISSING_RATE)),
            },
            Task::Synthesis | Task::ClassSynthesis => ResolvedGeometry {
                length: g.length.unwrap_or(PROTOCOL_LENGTH),
                max_features: g.max_features.unwrap_or(PROTOCOL_MAX_FEATURES),
                l_obs: None,
                missing_rate: None,
            },
        }
    }

    /// Every check that can fail before data is built or a model trained.
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        let fail = |msg: String| Err(BenchError::config(msg));
        match self.task {
            Task::Forecasting => {
                if g.length.is_some() || g.missing_rate.is_some() {
                    return fail("forecasting geometry takes l_obs and l_pred, not length or missing_rate".into());
                }
            }
            Task::Imputation => {
                if g.l_obs.is_some() || g.l_pred.is_some() {
                    return fail("imputation geometry takes length and missing_rate, not l_obs or l_pred".into());
                }
            }
            Task::Synthesis | Task::ClassSynthesis => {
                if g.l_obs.is_some() || g.l_pred.is_some() || g.missing_rate.is_some() {
                    return fail(format!("{} geometry takes only length and max_features", self.task.name()));
                }
            }
        }
        let r = self.resolved_geometry();
        if r.length == 0 || r.max_features == 0 || r.l_obs == Some(0) {
            return fail("geometry sizes must be >= 1".into());
        }
        if let Some(rate) = r.missing_rate {
            if !(rate > 0.0 && rate < 1.0) {
                return fail(format!("missing rate {rate} outside (0, 1)"));
            }
        }
        if !self.allow_override {
            let deviations = self.protocol_deviations();
            if !deviations.is_empty() {
                return fail(format!(
                    "geometry departs from the protocol ({}); set \"override\": true to allow",
                    deviations.join(", ")
                ));
            }
        }
        if self.task == Task::ClassSynthesis && !self.dataset.is_labeled() {
            return fail(format!("class_synthesis needs a labeled dataset, {} has no labels", self.dataset.name()));
        }
        if !supports_task(&self.model, self.task) {
            return fail(format!("{} does not support {}", self.model.kind().name(), self.task.name()));
        }
        let metrics = self.metrics();
        if metrics.is_empty() {
            return fail("metric list is empty".into());
        }
        for (i, m) in metrics.iter().enumerate() {
            if !self.task.supports(*m) {
                return fail(format!("metric {} is not defined for {}", m.name(), self.task.name()));
            }
            if metrics[..i].contains(m) {
                return fail(format!("metric {} listed twice", m.name()));
            }
        }
        if self.n_draws == 0 {
            return fail("n_draws must be >= 1".into());
        }
        if self.max_test_samples == Some(0) {
            return fail("max_test_samples must be >= 1".into());
        }
        if self.sliced_projections == 0 {
            return fail("sliced_projections must be >= 1".into());
        }
        if let DatasetSpec::Csv { stride: 0, .. } = self.dataset {
            return fail("csv stride must be >= 1".into());
        }
        self.model.validate().map_err(|e| BenchError::config(e.to_string()))?;
        self.trainer.validate().map_err(|e| BenchError::config(e.to_string()))?;
        self.split.sizes(1000).map_err(|e| BenchError::config(e.to_string()))?;
        Ok(())
    }

    /// Geometry fields that differ from the protocol for this task.
    pub fn protocol_deviations(&self) -> Vec<String> {
        let r = self.resolved_geometry();
        let mut out = Vec::new();
        match self.task {
            Task::Forecasting => {
                if r.l_obs != Some(PROTOCOL_L_OBS) {
                    out.push(format!("l_obs {:?}", r.l_obs));
                }
                if r.length != PROTOCOL_L_PRED {
                    out.push(format!("l_pred {}", r.length));
                }
            }
            _ => {
                if r.length != PROTOCOL_LENGTH {
                    out.push(format!("length {}", r.length));
                }
            }
        }
        if r.max_features != PROTOCOL_MAX_FEATURES {
            out.push(format!("max_features {}", r.max_features));
        }
        if let Some(rate) = r.missing_rate {
            if rate != PROTOCOL_MISSING_RATE {
                out.push(format!("missing_rate {rate}"));
            }
        }
        out
    }

    /// Trainer with its seed mixed into the run seed.
    pub fn effective_trainer(&self) -> TrainerConfig {
        TrainerConfig { seed: mix(self.seed, "fit", self.trainer.seed), ..self.trainer.clone() }
    }

    pub fn effective_evaluator(&self) -> EvaluatorConfig {
        EvaluatorConfig { seed: mix(self.seed, "evaluator", self.evaluator.seed), ..self.evaluator.clone() }
    }

    pub fn effective_contrastive(&self) -> ContrastiveConfig {
        ContrastiveConfig { seed: mix(self.seed, "contrastive", self.contrastive.seed), ..self.contrastive.clone() }
    }

    /// Canonical JSON: every default made explicit, keys sorted.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// Directory name of this run: the first 16 hex digits of the hash.
    pub fn run_id(&self) -> String {
        self.hash()[..16].to_string()
    }
}

/// Nested seeds are offsets on a stream derived from the run seed.
fn mix(run_seed: u64, label: &str, nested: u64) -> u64 {
    derive_seed(run_seed, label) ^ nested
}

/// Task support per model family. Every vanilla model accepts every
/// condition mode, so all pairs are valid today.
pub fn supports_task(model: &ModelConfig, task: Task) -> bool {
    let _ = model;
    matches!(task, Task::Synthesis | Task::ClassSynthesis | Task::Forecasting | Task::Imputation)
}
