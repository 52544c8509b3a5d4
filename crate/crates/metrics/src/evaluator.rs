//! Post-hoc recurrent evaluators: the discriminative score (a real-vs-fake
//! GRU classifier) and the predictive score (train on synthetic, test on real
//! one-step-ahead GRU forecaster).

use candle_core::{DType, Device, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use tsgb_core::rng::Rng;
use tsgb_core::{Scaler, ScalerMethod, SeriesSet};
use tsgb_nn::convert::{array3_to_tensor, scalar};
use tsgb_nn::{ops, Adam, AdamConfig, Gru, Linear, ParamStore};

use crate::error::{MetricError, Result};

/// Fraction of the mixed real/fake set used to train the classifier.
pub const DS_TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluatorConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Scores are averaged over this many evaluator seeds.
    pub n_seeds: usize,
    pub seed: u64,
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            epochs: 50,
            batch_size: 128,
            lr: 1e-3,
            n_seeds: 3,
            seed: 0,
        }
    }
}

impl EvaluatorConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.epochs == 0 || self.batch_size == 0 || self.n_seeds == 0 {
            return Err(MetricError::Parameter(
                "evaluator hidden, epochs, batch_size and n_seeds must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// `|0.5 − accuracy|`.
pub fn ds_from_accuracy(accuracy: f64) -> f64 {
    (0.5 - accuracy).abs()
}

fn check_geometry(real: &SeriesSet, fake: &SeriesSet) -> Result<()> {
    if real.len_t() != fake.len_t() || real.n_features() != fake.n_features() {
        return Err(MetricError::Sizing(format!(
            "real {:?} and fake {:?} differ in geometry",
            real.dim(),
            fake.dim()
        )));
    }
    Ok(())
}

/// Both sets min-max scaled with statistics of the real set.
fn joint_scale(real: &SeriesSet, fake: &SeriesSet) -> Result<(SeriesSet, SeriesSet)> {
    let scaler = Scaler::fit(real, ScalerMethod::Minmax)?;
    Ok((scaler.apply(real)?, scaler.apply(fake)?))
}

struct GruHead {
    store: ParamStore,
    gru: Gru,
    head: Linear,
}

impl GruHead {
    fn new(seed: u64, in_dim: usize, hidden: usize, out_dim: usize) -> candle_core::Result<Self> {
        let mut store = ParamStore::new(seed, DType::F32, Device::Cpu);
        let gru = Gru::new(&mut store, "gru", in_dim, hidden)?;
        let head = Linear::new(&mut store, "head", hidden, out_dim)?;
        Ok(Self { store, gru, head })
    }
}

fn batches(n: usize, batch: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(batch).map(<[usize]>::to_vec).collect()
}

fn gather(x: &Tensor, idx: &[usize]) -> candle_core::Result<Tensor> {
    let ids = Tensor::from_vec(idx.iter().map(|&i| i as u32).collect::<Vec<_>>(), idx.len(), x.device())?;
    x.index_select(&ids, 0)
}

/// Held-out accuracy of one classifier run.
fn classifier_accuracy(real: &Tensor, fake: &Tensor, cfg: &EvaluatorConfig, seed: u64) -> Result<f64> {
    let (n_real, _, d) = real.dims3()?;
    let n_fake = fake.dim(0)?;
    let x = Tensor::cat(&[real, fake], 0)?;
    let labels: Vec<f32> = (0..n_real + n_fake).map(|i| if i < n_real { 1.0 } else { 0.0 }).collect();
    let y = Tensor::from_vec(labels, n_real + n_fake, &Device::Cpu)?;

    let mut rng = Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n_real + n_fake).collect();
    order.shuffle(&mut rng);
    let n_train = ((order.len() as f64) * DS_TRAIN_FRACTION).round() as usize;
    let (train_idx, test_idx) = order.split_at(n_train);

    let model = GruHead::new(seed ^ 0x5eed, d, cfg.hidden, 1)?;
    let mut opt = Adam::new(
        model.store.vars(),
        AdamConfig {
            lr: cfg.lr,
            clip_norm: None,
            ..Default::default()
        },
    )?;
    let logits = |xb: &Tensor| -> candle_core::Result<Tensor> {
        let h = model.gru.forward(xb)?;
        let t = h.dim(1)?;
        model.head.forward(&h.narrow(1, t - 1, 1)?.squeeze(1)?)?.squeeze(1)
    };
    let train_x = gather(&x, train_idx)?;
    let train_y = gather(&y, train_idx)?;
    for _ in 0..cfg.epochs {
        for b in batches(train_idx.len(), cfg.batch_size, &mut rng) {
            let loss = ops::bce_with_logits(&logits(&gather(&train_x, &b)?)?, &gather(&train_y, &b)?)?;
            opt.backward_step(&loss)?;
        }
    }
    let test_logits = logits(&gather(&x, test_idx)?)?.to_vec1::<f32>()?;
    let test_y = gather(&y, test_idx)?.to_vec1::<f32>()?;
    let correct = test_logits
        .iter()
        .zip(&test_y)
        .filter(|(l, y)| (**l > 0.0) == (**y > 0.5))
        .count();
    Ok(correct as f64 / test_idx.len() as f64)
}

/// Mean over evaluator seeds of `|0.5 − held-out accuracy|` of a GRU
/// classifier separating `real` (True) from `fake` (False).
pub fn discriminative_score(real: &SeriesSet, fake: &SeriesSet, cfg: &EvaluatorConfig) -> Result<f64> {
    cfg.validate()?;
    check_geometry(real, fake)?;
    if real.len() + fake.len() < 10 {
        return Err(MetricError::InsufficientData(format!(
            "{} samples; the discriminative score needs at least 10",
            real.len() + fake.len()
        )));
    }
    let (real, fake) = joint_scale(real, fake)?;
    let rt = array3_to_tensor(real.values(), DType::F32, &Device::Cpu)?;
    let ft = array3_to_tensor(fake.values(), DType::F32, &Device::Cpu)?;
    let mut total = 0.0;
    for s in 0..cfg.n_seeds {
        let acc = classifier_accuracy(&rt, &ft, cfg, cfg.seed.wrapping_add(s as u64))?;
        total += ds_from_accuracy(acc);
    }
    Ok(total / cfg.n_seeds as f64)
}

fn forecaster_mae(train: &Tensor, test: &Tensor, cfg: &EvaluatorConfig, seed: u64) -> Result<f64> {
    let (n, t, d) = train.dims3()?;
    let model = GruHead::new(seed ^ 0xfeed, d, cfg.hidden, d)?;
    let mut opt = Adam::new(
        model.store.vars(),
        AdamConfig {
            lr: cfg.lr,
            clip_norm: None,
            ..Default::default()
        },
    )?;
    let predict = |xb: &Tensor| -> candle_core::Result<(Tensor, Tensor)> {
        let inputs = xb.narrow(1, 0, t - 1)?;
        let targets = xb.narrow(1, 1, t - 1)?;
        let pred = model.head.forward(&model.gru.forward(&inputs)?)?;
        Ok((pred, targets))
    };
    let mut rng = Rng::seed_from_u64(seed);
    for _ in 0..cfg.epochs {
        for b in batches(n, cfg.batch_size, &mut rng) {
            let (pred, target) = predict(&gather(train, &b)?)?;
            let loss = (pred - target)?.abs()?.mean_all()?;
            opt.backward_step(&loss)?;
        }
    }
    let (pred, target) = predict(test)?;
    Ok(scalar(&(pred - target)?.abs()?.mean_all()?)?)
}

/// Train on `fake`, test on `real`: mean absolute one-step-ahead error of a
/// GRU forecaster, averaged over evaluator seeds.
pub fn predictive_score(real: &SeriesSet, fake: &SeriesSet, cfg: &EvaluatorConfig) -> Result<f64> {
    cfg.validate()?;
    check_geometry(real, fake)?;
    if real.len_t() < 2 {
        return Err(MetricError::Sizing(
            "the predictive score needs series of length >= 2".into(),
        ));
    }
    if real.is_empty() || fake.is_empty() {
        return Err(MetricError::InsufficientData("empty set".into()));
    }
    let (real, fake) = joint_scale(real, fake)?;
    let rt = array3_to_tensor(real.values(), DType::F32, &Device::Cpu)?;
    let ft = array3_to_tensor(fake.values(), DType::F32, &Device::Cpu)?;
    let mut total = 0.0;
    for s in 0..cfg.n_seeds {
        total += forecaster_mae(&ft, &rt, cfg, cfg.seed.wrapping_add(s as u64))?;
    }
    Ok(total / cfg.n_seeds as f64)
}
