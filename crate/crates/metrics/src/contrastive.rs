//! A reduced contrastive sequence encoder and the Context-FID built on it.
//!
//! The encoder is a stack of residual dilated convolutions trained with a
//! hierarchical contrastive loss on two overlapping random crops: at every
//! scale (repeated max-pooling over time) it contrasts instances within the
//! batch and time steps within each series. It is retrained on the real
//! set for every evaluation.

use candle_core::{DType, Device, Tensor, D};
use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};
use tsgb_core::rng::Rng;
use tsgb_core::{Scaler, ScalerMethod, SeriesSet};
use tsgb_nn::convert::array3_to_tensor;
use tsgb_nn::ops::log_softmax_last;
use tsgb_nn::{Adam, AdamConfig, Conv1d, Linear, ParamStore};

use crate::error::{MetricError, Result};
use crate::frechet::{frechet_distance, gaussian_moments};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContrastiveConfig {
    pub output_width: usize,
    pub hidden: usize,
    pub depth: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Probability of masking a latent time step in a training view.
    pub mask_prob: f64,
    pub seed: u64,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        Self {
            output_width: 64,
            hidden: 64,
            depth: 3,
            epochs: 20,
            batch_size: 32,
            lr: 1e-3,
            mask_prob: 0.5,
            seed: 0,
        }
    }
}

pub struct ContrastiveEncoder {
    store: ParamStore,
    input: Linear,
    blocks: Vec<(Conv1d, Conv1d)>,
    output: Conv1d,
    scaler: Scaler,
    cfg: ContrastiveConfig,
}

impl ContrastiveEncoder {
    fn build(cfg: &ContrastiveConfig, features: usize, scaler: Scaler) -> candle_core::Result<Self> {
        let mut store = ParamStore::new(cfg.seed, DType::F32, Device::Cpu);
        let input = Linear::new(&mut store, "input", features, cfg.hidden)?;
        let mut blocks = Vec::with_capacity(cfg.depth);
        for i in 0..cfg.depth {
            let dil = 1 << i;
            blocks.push((
                Conv1d::new(&mut store, &format!("block{i}.a"), cfg.hidden, cfg.hidden, 3, dil)?,
                Conv1d::new(&mut store, &format!("block{i}.b"), cfg.hidden, cfg.hidden, 3, dil)?,
            ));
        }
        let output = Conv1d::new(
            &mut store,
            "output",
            cfg.hidden,
            cfg.output_width,
            3,
            1 << cfg.depth,
        )?;
        Ok(Self {
            store,
            input,
            blocks,
            output,
            scaler,
            cfg: cfg.clone(),
        })
    }

    /// `[B, T, D] -> [B, T, output_width]`. `time_mask` is `[B, T, 1]` of 0/1.
    fn forward(&self, x: &Tensor, time_mask: Option<&Tensor>) -> candle_core::Result<Tensor> {
        let mut h = self.input.forward(x)?;
        if let Some(m) = time_mask {
            h = h.broadcast_mul(m)?;
        }
        let mut h = h.transpose(1, 2)?.contiguous()?;
        for (a, b) in &self.blocks {
            let inner = b.forward(&a.forward(&h.gelu_erf()?)?.gelu_erf()?)?;
            h = (h + inner)?;
        }
        self.output.forward(&h)?.transpose(1, 2)?.contiguous()
    }

    /// Trains a fresh encoder on `data`.
    pub fn fit(data: &SeriesSet, cfg: &ContrastiveConfig) -> Result<Self> {
        if data.len() < 2 {
            return Err(MetricError::InsufficientData(
                "contrastive training needs at least 2 series".into(),
            ));
        }
        let scaler = Scaler::fit(data, ScalerMethod::Zscore)?;
        let enc = Self::build(cfg, data.n_features(), scaler)?;
        let x = array3_to_tensor(enc.scaler.apply(data)?.values(), DType::F32, &Device::Cpu)?;
        let (n, t, _) = x.dims3()?;
        let mut rng = Rng::seed_from_u64(cfg.seed ^ 0xc0ffee);
        let mut opt = Adam::new(
            enc.store.vars(),
            AdamConfig {
                lr: cfg.lr,
                clip_norm: None,
                ..Default::default()
            },
        )?;
        for _ in 0..cfg.epochs {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.batch_size) {
                if chunk.len() < 2 && t < 2 {
                    continue;
                }
                let ids = Tensor::from_vec(chunk.iter().map(|&i| i as u32).collect::<Vec<_>>(), chunk.len(), &Device::Cpu)?;
                let xb = x.index_select(&ids, 0)?;
                let loss = enc.crop_loss(&xb, t, &mut rng)?;
                opt.backward_step(&loss)?;
            }
        }
        Ok(enc)
    }

    fn random_mask(&self, b: usize, t: usize, rng: &mut Rng) -> candle_core::Result<Tensor> {
        let bits: Vec<f32> = (0..b * t)
            .map(|_| if rng.random_bool(self.cfg.mask_prob) { 0.0 } else { 1.0 })
            .collect();
        Tensor::from_vec(bits, (b, t, 1), &Device::Cpu)
    }

    fn crop_loss(&self, xb: &Tensor, t: usize, rng: &mut Rng) -> candle_core::Result<Tensor> {
        let b = xb.dim(0)?;
        let crop = if t >= 2 { rng.random_range(2..=t) } else { t };
        let start2 = rng.random_range(0..=t - crop);
        let end1 = start2 + crop;
        let start1 = rng.random_range(0..=start2);
        let end2 = rng.random_range(end1..=t);
        let v1 = xb.narrow(1, start1, end1 - start1)?;
        let v2 = xb.narrow(1, start2, end2 - start2)?;
        let m1 = self.random_mask(b, end1 - start1, rng)?;
        let m2 = self.random_mask(b, end2 - start2, rng)?;
        let z1 = self.forward(&v1, Some(&m1))?.narrow(1, start2 - start1, crop)?;
        let z2 = self.forward(&v2, Some(&m2))?.narrow(1, 0, crop)?;
        hierarchical_loss(&z1, &z2)
    }

    /// Full-series embeddings (max-pooled over time), one row per sample.
    pub fn embed(&self, data: &SeriesSet) -> Result<Vec<Vec<f64>>> {
        let x = array3_to_tensor(self.scaler.apply(data)?.values(), DType::F32, &Device::Cpu)?;
        let n = x.dim(0)?;
        let mut rows = Vec::with_capacity(n);
        for start in (0..n).step_by(256) {
            let len = (n - start).min(256);
            let z = self.forward(&x.narrow(0, start, len)?, None)?.max(1)?;
            for row in z.to_dtype(DType::F64)?.to_vec2::<f64>()? {
                rows.push(row);
            }
        }
        Ok(rows)
    }

    pub fn output_width(&self) -> usize {
        self.cfg.output_width
    }
}

/// Constant `[n, n]` tensor with a large negative diagonal.
fn diag_block(n: usize, dtype: DType) -> candle_core::Result<Tensor> {
    let data: Vec<f32> = (0..n * n).map(|k| if k / n == k % n { -1e9 } else { 0.0 }).collect();
    Tensor::from_vec(data, (n, n), &Device::Cpu)?.to_dtype(dtype)
}

/// Positive pairs: row `i` pairs with `i + half`, and vice versa.
fn positive_mask(half: usize, dtype: DType) -> candle_core::Result<Tensor> {
    let n = 2 * half;
    let data: Vec<f32> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if j == (i + half) % n { 1.0 } else { 0.0 }
        })
        .collect();
    Tensor::from_vec(data, (n, n), &Device::Cpu)?.to_dtype(dtype)
}

/// Contrastive loss over the middle axis of `[G, 2K, C]` pairs (`[z1; z2]`).
fn pair_loss(z: &Tensor, half: usize) -> candle_core::Result<Tensor> {
    let sim = z.matmul(&z.transpose(1, 2)?)?;
    let logits = sim.broadcast_add(&diag_block(2 * half, z.dtype())?)?;
    let logp = log_softmax_last(&logits)?;
    let picked = logp.broadcast_mul(&positive_mask(half, z.dtype())?)?.sum(D::Minus1)?;
    picked.mean_all()?.neg()
}

fn instance_loss(z1: &Tensor, z2: &Tensor) -> candle_core::Result<Option<Tensor>> {
    let b = z1.dim(0)?;
    if b < 2 {
        return Ok(None);
    }
    // [T, 2B, C]
    let z = Tensor::cat(&[z1, z2], 0)?.transpose(0, 1)?.contiguous()?;
    pair_loss(&z, b).map(Some)
}

fn temporal_loss(z1: &Tensor, z2: &Tensor) -> candle_core::Result<Option<Tensor>> {
    let t = z1.dim(1)?;
    if t < 2 {
        return Ok(None);
    }
    // [B, 2T, C]
    let z = Tensor::cat(&[z1, z2], 1)?;
    pair_loss(&z, t).map(Some)
}

fn hierarchical_loss(z1: &Tensor, z2: &Tensor) -> candle_core::Result<Tensor> {
    let mut a = z1.clone();
    let mut b = z2.clone();
    let mut terms = Vec::new();
    loop {
        if let Some(l) = instance_loss(&a, &b)? {
            terms.push(l);
        }
        let t = a.dim(1)?;
        if t <= 1 {
            break;
        }
        if let Some(l) = temporal_loss(&a, &b)? {
            terms.push(l);
        }
        let half = t / 2;
        let pool = |z: &Tensor| -> candle_core::Result<Tensor> {
            let (bs, _, c) = z.dims3()?;
            z.narrow(1, 0, 2 * half)?.reshape((bs, half, 2, c))?.max(2)
        };
        a = pool(&a)?;
        b = pool(&b)?;
    }
    let n = terms.len().max(1) as f64;
    let sum = terms
        .into_iter()
        .reduce(|x, y| (x + y).expect("same shape"))
        .unwrap_or(Tensor::zeros((), z1.dtype(), &Device::Cpu)?);
    sum / n
}

/// Fréchet distance between Gaussian fits of encoder embeddings of `real`
/// and `fake`, with the encoder trained on `real`.
pub fn context_fid(real: &SeriesSet, fake: &SeriesSet, cfg: &ContrastiveConfig) -> Result<f64> {
    if real.is_empty() || fake.is_empty() {
        return Err(MetricError::InsufficientData("empty set".into()));
    }
    if real.len_t() != fake.len_t() || real.n_features() != fake.n_features() {
        return Err(MetricError::Sizing("geometry mismatch".into()));
    }
    let need = cfg.output_width + 1;
    if real.len() < need || fake.len() < need {
        return Err(MetricError::InsufficientData(format!(
            "covariance of width-{} embeddings needs {need} samples per set, got {} and {}",
            cfg.output_width,
            real.len(),
            fake.len()
        )));
    }
    let enc = ContrastiveEncoder::fit(real, cfg)?;
    let (m1, s1) = gaussian_moments(&enc.embed(real)?)?;
    let (m2, s2) = gaussian_moments(&enc.embed(fake)?)?;
    frechet_distance(&m1, &s1, &m2, &s2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tsgb_core::{gen_sine_nd, SineNDParams};

    fn quick() -> ContrastiveConfig {
        ContrastiveConfig {
            output_width: 8,
            hidden: 16,
            depth: 2,
            epochs: 3,
            ..Default::default()
        }
    }

    #[test]
    fn loss_is_finite_and_embeddings_have_width() {
        let data = gen_sine_nd(&SineNDParams::new(40, 12, 2, 0)).unwrap();
        let enc = ContrastiveEncoder::fit(&data, &quick()).unwrap();
        let rows = enc.embed(&data).unwrap();
        assert_eq!(rows.len(), 40);
        assert!(rows.iter().all(|r| r.len() == 8 && r.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn identical_sets_score_zero() {
        let data = gen_sine_nd(&SineNDParams::new(40, 12, 2, 1)).unwrap();
        let fid = context_fid(&data, &data.clone(), &quick()).unwrap();
        assert!(fid <= 1e-6, "fid = {fid}");
    }

    #[test]
    fn too_few_samples_is_error() {
        let data = gen_sine_nd(&SineNDParams::new(5, 12, 2, 1)).unwrap();
        assert!(matches!(
            context_fid(&data, &data, &quick()),
            Err(MetricError::InsufficientData(_))
        ));
    }

    #[test]
    fn contrastive_loss_prefers_aligned_views() {
        let dev = Device::Cpu;
        let z = Tensor::randn(0f32, 1.0, (4, 6, 5), &dev).unwrap();
        let aligned = hierarchical_loss(&z, &z).unwrap().to_scalar::<f32>().unwrap();
        let other = Tensor::randn(0f32, 1.0, (4, 6, 5), &dev).unwrap();
        let shuffled = hierarchical_loss(&z, &other).unwrap().to_scalar::<f32>().unwrap();
        assert!(aligned < shuffled);
    }
}
