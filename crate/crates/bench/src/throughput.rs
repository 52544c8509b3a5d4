//! Per-batch training and sampling time.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use tsgb_core::rng::{derive_seed, seeded};
use tsgb_core::simulate_missing;
use tsgb_models::{Condition, ConditionData, FittedModel, TrainData};

use crate::error::{AtStage, BenchError, Result, Stage};

pub const DEFAULT_BATCH: usize = 64;
pub const DEFAULT_REPEATS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingEntry {
    pub phase: Phase,
    pub warmup: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub batch_size: usize,
    pub repeats: usize,
    /// Mean over the timed repeats; warm-up excluded.
    pub train_step_seconds: f64,
    pub sample_seconds: f64,
    pub log: Vec<TimingEntry>,
}

fn batch_condition(data: &TrainData, rows: &[usize], seed: u64) -> Result<Condition> {
    Ok(match &data.condition {
        ConditionData::None => Condition::None(rows.len()),
        ConditionData::Class(labels) => Condition::Class(rows.iter().map(|&r| labels[r]).collect()),
        ConditionData::History(h) => Condition::History(h.select(rows)),
        ConditionData::Mask { rate } => {
            let (observed, mask) = simulate_missing(&data.series.select(rows), *rate, seed).at(Stage::Data)?;
            Condition::Masked { observed, mask }
        }
    })
}

fn timed<F: FnMut() -> Result<()>>(mut f: F) -> Result<f64> {
    let t0 = Instant::now();
    f()?;
    Ok(t0.elapsed().as_secs_f64().max(f64::MIN_POSITIVE))
}

/// Mean time of one training step and of sampling one batch, after a
/// warm-up iteration of each. Training steps update the model.
pub fn measure_throughput(
    model: &mut FittedModel,
    data: &TrainData,
    batch_size: usize,
    repeats: usize,
    seed: u64,
) -> Result<Throughput> {
    if batch_size == 0 || repeats == 0 {
        return Err(BenchError::config("batch size and repeats must be >= 1"));
    }
    if batch_size > data.len() {
        return Err(BenchError::new(
            Stage::Data,
            format!("sizing error: batch of {batch_size} exceeds the {} available series", data.len()),
        ));
    }
    let rows: Vec<usize> = (0..batch_size).collect();
    let prepared = model.prepare(data).at(Stage::Fit)?;
    let mut rng = seeded(derive_seed(seed, "throughput"));
    let batch = prepared.batch(&rows, &mut rng).at(Stage::Fit)?;
    let cond = batch_condition(data, &rows, derive_seed(seed, "throughput-mask"))?;

    let mut log = Vec::with_capacity(2 * (repeats + 1));
    for i in 0..=repeats {
        let seconds = timed(|| {
            model.model_mut().train_step(&batch, i, &mut rng).at(Stage::Fit)?;
            Ok(())
        })?;
        log.push(TimingEntry { phase: Phase::Train, warmup: i == 0, seconds });
    }
    for i in 0..=repeats {
        let seconds = timed(|| {
            model.sample_unchecked(1, &cond, derive_seed(seed, &format!("sample-{i}"))).at(Stage::Sample)?;
            Ok(())
        })?;
        log.push(TimingEntry { phase: Phase::Sample, warmup: i == 0, seconds });
    }
    let mean = |phase: Phase| {
        let v: Vec<f64> = log.iter().filter(|e| e.phase == phase && !e.warmup).map(|e| e.seconds).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    Ok(Throughput {
        batch_size,
        repeats,
        train_step_seconds: mean(Phase::Train),
        sample_seconds: mean(Phase::Sample),
        log,
    })
}
