//! One benchmark run: data, fit, sample, score, persist.

use std::cell::Cell;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array3, Array4, Axis};
use serde::{Deserialize, Serialize};
use tsgb_core::rng::derive_seed;
use tsgb_core::store::{load_set, save_set, StoredSet};
use tsgb_core::{assemble_imputation, Mask, SeriesSet};
use tsgb_metrics::{
    context_fid, crps_ensemble, discriminative_score, marginal_wasserstein, masked_mse, mse, predictive_score,
    sliced_wasserstein, MetricKind, MetricReport,
};
use tsgb_models::{FittedModel, TrainingLog};

use crate::config::{RunConfig, Task};
use crate::data::{build_task_data, TaskData, TestData};
use crate::error::{AtStage, BenchError, Result, Stage};

/// Rows per sampling batch used to report per-batch time.
pub const TIMING_BATCH: usize = 64;

pub const CONFIG_FILE: &str = "config.json";
pub const RESULT_FILE: &str = "result.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const LOG_FILE: &str = "training_log.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const FAILURE_FILE: &str = "failure.json";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const REFERENCE_DIR: &str = "reference";
pub const INPUTS_DIR: &str = "inputs";
pub const DRAWS_DIR: &str = "draws";
pub const PREDICTIONS_DIR: &str = "predictions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub fit_seconds: f64,
    /// Fit time divided by the number of optimizer steps taken.
    pub train_step_seconds: f64,
    pub sample_seconds: f64,
    /// Sampling time per batch of [`TIMING_BATCH`] rows.
    pub sample_batch_seconds: f64,
    pub metrics_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: RunConfig,
    pub config_hash: String,
    pub report: MetricReport,
    pub log: TrainingLog,
    pub timings: Timings,
    /// Checkpoint directory, relative to the run directory.
    pub checkpoint: PathBuf,
}

impl RunResult {
    pub fn load(run_dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(run_dir.join(RESULT_FILE)).at(Stage::Report)?;
        serde_json::from_str(&text).at(Stage::Report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub stage: Stage,
    pub message: String,
    pub config_hash: String,
}

/// Directory of a config's run under `runs_root`.
pub fn run_dir(runs_root: &Path, cfg: &RunConfig) -> PathBuf {
    runs_root.join(cfg.run_id())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).at(Stage::Persist)?;
    fs::write(path, text).at(Stage::Persist)
}

fn store(dir: &Path, series: &SeriesSet, mask: Option<&Mask>, labels: Option<&[usize]>, what: &str) -> Result<()> {
    let stored = StoredSet {
        series: series.clone(),
        mask: mask.cloned(),
        labels: labels.map(<[usize]>::to_vec),
        seed: None,
        provenance: serde_json::json!({ "content": what }),
    };
    save_set(dir, &stored).at(Stage::Persist)
}

pub fn load_stored(dir: &Path) -> Result<StoredSet> {
    load_set(dir).at(Stage::Report)
}

/// Reshape draw-major `[S·B, T, D]` samples into `[S, B, T, D]`.
pub fn split_draws(samples: &SeriesSet, n_draws: usize) -> Array4<f64> {
    let (rows, t, d) = samples.dim();
    let b = rows / n_draws;
    samples
        .values()
        .clone()
        .into_shape_with_order((n_draws, b, t, d))
        .expect("draw-major samples reshape")
}

fn mean_over_draws(draws: &Array4<f64>) -> Array3<f64> {
    let s = draws.len_of(Axis(0));
    let mut mean = Array3::<f64>::zeros(draws.index_axis(Axis(0), 0).dim());
    for draw in draws.axis_iter(Axis(0)) {
        mean += &draw;
    }
    mean / s as f64
}

/// Runs `cfg`, persisting everything under `runs_root/<run id>/`. On error a
/// `failure.json` naming the stage is written instead of a result.
pub fn run_benchmark(cfg: &RunConfig, runs_root: &Path) -> Result<RunResult> {
    cfg.validate()?;
    let dir = run_dir(runs_root, cfg);
    fs::create_dir_all(&dir).at(Stage::Persist)?;
    let _ = fs::remove_file(dir.join(FAILURE_FILE));
    write_json(&dir.join(CONFIG_FILE), cfg)?;

    let stage = Cell::new(Stage::Data);
    let outcome = catch_unwind(AssertUnwindSafe(|| execute(cfg, &dir, &stage)));
    let result = match outcome {
        Ok(r) => r,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(BenchError::new(stage.get(), format!("panicked: {msg}")))
        }
    };
    if let Err(e) = &result {
        let record = FailureRecord { stage: e.stage, message: e.message.clone(), config_hash: cfg.hash() };
        write_json(&dir.join(FAILURE_FILE), &record)?;
    }
    result
}

fn execute(cfg: &RunConfig, dir: &Path, stage: &Cell<Stage>) -> Result<RunResult> {
    stage.set(Stage::Data);
    let data = build_task_data(cfg)?;

    stage.set(Stage::Fit);
    let trainer = cfg.effective_trainer();
    let t0 = Instant::now();
    let fitted = FittedModel::fit(&cfg.model, &data.spec, &data.train, &data.val, &trainer).at(Stage::Fit)?;
    let fit_seconds = t0.elapsed().as_secs_f64();
    let epochs = fitted.log().train_loss.len();
    let steps = (epochs * data.train.len().div_ceil(trainer.batch_size)).max(1);

    stage.set(Stage::Persist);
    fitted.save(dir.join(CHECKPOINT_DIR)).at(Stage::Persist)?;
    write_json(&dir.join(LOG_FILE), fitted.log())?;

    stage.set(Stage::Sample);
    let draws = match cfg.task {
        Task::Synthesis | Task::ClassSynthesis => 1,
        Task::Forecasting | Task::Imputation => cfg.n_draws,
    };
    let t0 = Instant::now();
    let samples = fitted
        .sample(draws, &data.test.condition(), derive_seed(cfg.seed, "sample"))
        .at(Stage::Sample)?;
    let sample_seconds = t0.elapsed().as_secs_f64();
    let sample_batches = samples.len().div_ceil(TIMING_BATCH).max(1);

    stage.set(Stage::Metrics);
    let t0 = Instant::now();
    let report = score(cfg, &data, &samples, draws, dir)?;
    let metrics_seconds = t0.elapsed().as_secs_f64();

    stage.set(Stage::Persist);
    let timings = Timings {
        fit_seconds,
        train_step_seconds: fit_seconds / steps as f64,
        sample_seconds,
        sample_batch_seconds: sample_seconds / sample_batches as f64,
        metrics_seconds,
    };
    let result = RunResult {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        report,
        log: fitted.log().clone(),
        timings,
        checkpoint: PathBuf::from(CHECKPOINT_DIR),
    };
    write_json(&dir.join(METRICS_FILE), &result.report)?;
    write_json(&dir.join(TIMINGS_FILE), &result.timings)?;
    write_json(&dir.join(RESULT_FILE), &result)?;
    Ok(result)
}

fn missing_selector(mask: &Mask) -> Array3<u8> {
    mask.bits().mapv(|m| 1 - m)
}

/// Scores the samples and persists the arrays the scores came from.
fn score(cfg: &RunConfig, data: &TaskData, samples: &SeriesSet, draws: usize, dir: &Path) -> Result<MetricReport> {
    let metrics = cfg.metrics();
    let mut report = MetricReport::default()
        .with_metadata("task", serde_json::json!(cfg.task.name()))
        .with_metadata("dataset", serde_json::json!(cfg.dataset.name()))
        .with_metadata("model", serde_json::json!(cfg.model.kind().name()))
        .with_metadata("test_samples", serde_json::json!(data.test.len()))
        .with_metadata("draws", serde_json::json!(draws));
    let m = |e: tsgb_metrics::MetricError| BenchError::new(Stage::Metrics, e.to_string());

    match &data.test {
        TestData::Synthesis { real } | TestData::ClassSynthesis { real, .. } => {
            let labels = match &data.test {
                TestData::ClassSynthesis { labels, .. } => Some(labels.as_slice()),
                _ => None,
            };
            store(&dir.join(REFERENCE_DIR), real, None, labels, "real test windows")?;
            store(&dir.join(PREDICTIONS_DIR), samples, None, labels, "generated windows")?;
            let evaluator = cfg.effective_evaluator();
            for kind in &metrics {
                let value = match kind {
                    MetricKind::ContextFid => context_fid(real, samples, &cfg.effective_contrastive()).map_err(m)?,
                    MetricKind::Wasserstein => marginal_wasserstein(real, samples).map_err(m)?,
                    MetricKind::SlicedWasserstein => {
                        sliced_wasserstein(real, samples, cfg.sliced_projections, derive_seed(cfg.seed, "sliced"))
                            .map_err(m)?
                    }
                    MetricKind::DiscriminativeScore => discriminative_score(real, samples, &evaluator).map_err(m)?,
                    MetricKind::PredictiveScore => predictive_score(real, samples, &evaluator).map_err(m)?,
                    other => return Err(BenchError::config(format!("{} undefined for synthesis", other.name()))),
                };
                report.insert(*kind, value);
            }
            if metrics.iter().any(|k| matches!(k, MetricKind::DiscriminativeScore | MetricKind::PredictiveScore)) {
                report = report.with_metadata("evaluator", serde_json::to_value(&evaluator).at(Stage::Metrics)?);
            }
            if metrics.contains(&MetricKind::ContextFid) {
                report = report
                    .with_metadata("contrastive", serde_json::to_value(cfg.effective_contrastive()).at(Stage::Metrics)?);
            }
        }
        TestData::Forecasting { history, target } => {
            let ensemble = split_draws(samples, draws);
            let mean = SeriesSet::new(mean_over_draws(&ensemble)).at(Stage::Metrics)?;
            store(&dir.join(INPUTS_DIR), history, None, None, "forecast histories")?;
            store(&dir.join(REFERENCE_DIR), target, None, None, "forecast targets")?;
            store(&dir.join(DRAWS_DIR), samples, None, None, "draw-major forecast ensemble")?;
            store(&dir.join(PREDICTIONS_DIR), &mean, None, None, "ensemble-mean forecasts")?;
            for kind in &metrics {
                let value = match kind {
                    MetricKind::Mse => mse(mean.values(), target.values()).map_err(m)?,
                    MetricKind::Crps => crps_ensemble(&ensemble, target.values(), None).map_err(m)?,
                    other => return Err(BenchError::config(format!("{} undefined for forecasting", other.name()))),
                };
                report.insert(*kind, value);
            }
        }
        TestData::Imputation { truth, observed, mask } => {
            let ensemble = split_draws(samples, draws);
            let mean = SeriesSet::new(mean_over_draws(&ensemble)).at(Stage::Metrics)?;
            let imputed = assemble_imputation(observed, mask, &mean).at(Stage::Metrics)?;
            let select = missing_selector(mask);
            store(&dir.join(INPUTS_DIR), observed, Some(mask), None, "observed windows and mask")?;
            store(&dir.join(REFERENCE_DIR), truth, Some(mask), None, "complete test windows")?;
            store(&dir.join(DRAWS_DIR), samples, None, None, "draw-major raw imputation ensemble")?;
            store(&dir.join(PREDICTIONS_DIR), &imputed, Some(mask), None, "assembled ensemble-mean imputations")?;
            for kind in &metrics {
                let value = match kind {
                    MetricKind::Mse => masked_mse(imputed.values(), truth.values(), &select).map_err(m)?,
                    MetricKind::Crps => crps_ensemble(&ensemble, truth.values(), Some(&select)).map_err(m)?,
                    other => return Err(BenchError::config(format!("{} undefined for imputation", other.name()))),
                };
                report.insert(*kind, value);
            }
            report = report.with_metadata("scored_entries", serde_json::json!(mask.count_missing()));
        }
    }
    Ok(report)
}
