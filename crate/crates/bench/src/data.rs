//! Dataset construction for each task.

use tsgb_core::rng::derive_seed;
use tsgb_core::{
    gen_sine_nd, gen_spiral2d, load_csv_dataset, make_forecast_pairs, make_windows, simulate_missing,
    split_indices, ColumnSelection, Mask, SeriesSet, SineNDParams, Spiral2DParams,
};
use tsgb_models::{Condition, ConditionData, ConditionSpec, TrainData};

use crate::config::{DatasetSpec, ResolvedGeometry, RunConfig, Task};
use crate::error::{AtStage, BenchError, Result, Stage};

/// Held-out data a run is scored on.
#[derive(Debug, Clone)]
pub enum TestData {
    Synthesis { real: SeriesSet },
    ClassSynthesis { real: SeriesSet, labels: Vec<usize> },
    Forecasting { history: SeriesSet, target: SeriesSet },
    Imputation { truth: SeriesSet, observed: SeriesSet, mask: Mask },
}

impl TestData {
    pub fn len(&self) -> usize {
        match self {
            TestData::Synthesis { real } | TestData::ClassSynthesis { real, .. } => real.len(),
            TestData::Forecasting { target, .. } => target.len(),
            TestData::Imputation { truth, .. } => truth.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The condition the model is sampled under, one row per test window.
    pub fn condition(&self) -> Condition {
        match self {
            TestData::Synthesis { real } => Condition::None(real.len()),
            TestData::ClassSynthesis { labels, .. } => Condition::Class(labels.clone()),
            TestData::Forecasting { history, .. } => Condition::History(history.clone()),
            TestData::Imputation { observed, mask, .. } => Condition::Masked {
                observed: observed.clone(),
                mask: mask.clone(),
            },
        }
    }

    /// Real windows the generated ones are compared against.
    pub fn reference(&self) -> &SeriesSet {
        match self {
            TestData::Synthesis { real } | TestData::ClassSynthesis { real, .. } => real,
            TestData::Forecasting { target, .. } => target,
            TestData::Imputation { truth, .. } => truth,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaskData {
    pub spec: ConditionSpec,
    pub train: TrainData,
    pub val: TrainData,
    pub test: TestData,
    /// Channel count of the source before the feature cap.
    pub source_features: usize,
}

struct Windows {
    set: SeriesSet,
    labels: Option<(Vec<usize>, usize)>,
    source_features: usize,
}

fn load_windows(spec: &DatasetSpec, g: &ResolvedGeometry) -> Result<Windows> {
    let window = g.window();
    match spec {
        DatasetSpec::Spiral2d { n_samples, noise_std, seed } => {
            let p = Spiral2DParams { n_samples: *n_samples, length: window, noise_std: *noise_std, seed: *seed };
            let l = gen_spiral2d(&p).at(Stage::Data)?;
            let d = l.set.n_features();
            Ok(Windows {
                set: l.set.take_features(g.max_features.min(d)),
                labels: Some((l.labels, l.n_classes)),
                source_features: d,
            })
        }
        DatasetSpec::SineNd { n_samples, dims, seed } => {
            let set = gen_sine_nd(&SineNDParams::new(*n_samples, window, *dims, *seed)).at(Stage::Data)?;
            Ok(Windows { set: set.take_features(g.max_features.min(*dims)), labels: None, source_features: *dims })
        }
        DatasetSpec::Csv { path, columns, timestamp_column, stride, .. } => {
            let selection = match columns {
                Some(c) => ColumnSelection::Named(c.clone()),
                None => ColumnSelection::Auto,
            };
            let csv = load_csv_dataset(path, &selection, timestamp_column.as_deref()).at(Stage::Data)?;
            let d = csv.series.n_features();
            let capped = csv.series.take_features(g.max_features.min(d));
            let set = make_windows(&capped, window, *stride).at(Stage::Data)?;
            Ok(Windows { set, labels: None, source_features: d })
        }
    }
}

/// Windows, splits and conditions for a configured run.
pub fn build_task_data(cfg: &RunConfig) -> Result<TaskData> {
    let g = cfg.resolved_geometry();
    let w = load_windows(&cfg.dataset, &g)?;
    let [train_idx, val_idx, mut test_idx] = split_indices(w.set.len(), &cfg.split).at(Stage::Data)?;
    if let Some(cap) = cfg.max_test_samples {
        test_idx.truncate(cap);
    }
    let source_features = w.source_features;
    let part = |idx: &[usize]| w.set.select(idx);

    let data = match cfg.task {
        Task::Synthesis => TaskData {
            spec: ConditionSpec::None,
            train: TrainData::unconditional(part(&train_idx)),
            val: TrainData::unconditional(part(&val_idx)),
            test: TestData::Synthesis { real: part(&test_idx) },
            source_features,
        },
        Task::ClassSynthesis => {
            let (labels, n_classes) = w
                .labels
                .as_ref()
                .ok_or_else(|| BenchError::new(Stage::Data, "dataset has no class labels"))?;
            let pick = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
            TaskData {
                spec: ConditionSpec::Class { n_classes: *n_classes },
                train: TrainData { series: part(&train_idx), condition: ConditionData::Class(pick(&train_idx)) },
                val: TrainData { series: part(&val_idx), condition: ConditionData::Class(pick(&val_idx)) },
                test: TestData::ClassSynthesis { real: part(&test_idx), labels: pick(&test_idx) },
                source_features,
            }
        }
        Task::Forecasting => {
            let l_obs = g.l_obs.expect("forecasting geometry has l_obs");
            let pair = |idx: &[usize]| make_forecast_pairs(&part(idx), l_obs, g.length).at(Stage::Data);
            let (tr, va, te) = (pair(&train_idx)?, pair(&val_idx)?, pair(&test_idx)?);
            TaskData {
                spec: ConditionSpec::History { length: l_obs },
                train: TrainData { series: tr.target, condition: ConditionData::History(tr.history) },
                val: TrainData { series: va.target, condition: ConditionData::History(va.history) },
                test: TestData::Forecasting { history: te.history, target: te.target },
                source_features,
            }
        }
        Task::Imputation => {
            let rate = g.missing_rate.expect("imputation geometry has a rate");
            let truth = part(&test_idx);
            let (observed, mask) =
                simulate_missing(&truth, rate, derive_seed(cfg.seed, "test-mask")).at(Stage::Data)?;
            TaskData {
                spec: ConditionSpec::Mask,
                train: TrainData { series: part(&train_idx), condition: ConditionData::Mask { rate } },
                val: TrainData { series: part(&val_idx), condition: ConditionData::Mask { rate } },
                test: TestData::Imputation { truth, observed, mask },
                source_features,
            }
        }
    };
    if data.test.is_empty() {
        return Err(BenchError::new(Stage::Data, "test split is empty"));
    }
    Ok(data)
}
