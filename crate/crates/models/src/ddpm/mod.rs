//! Denoising diffusion model with a transformer backbone.

mod dit;
mod schedule;

pub use dit::Denoiser;
pub use schedule::NoiseSchedule;

use candle_core::{DType, Device, Tensor};
use ndarray::{Array3, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use tsgb_core::rng::Rng;
use tsgb_nn::ops::mse;
use tsgb_nn::{Adam, AdamConfig, ParamStore};

use crate::condition::{CondBatch, ConditionEncoder, ConditionSpec};
use crate::config::{DdpmConfig, Geometry, ModelKind, Prediction};
use crate::error::{ModelError, Result};
use crate::model::{Batch, GenerativeModel};
use crate::util::{chunks, finite_scalar, randn};

const SAMPLE_CHUNK: usize = 512;

/// Per-feature clipping range for denoised estimates, in normalized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

pub struct Ddpm {
    cfg: DdpmConfig,
    geometry: Geometry,
    store: ParamStore,
    cond: ConditionEncoder,
    net: Denoiser,
    schedule: NoiseSchedule,
    opt: Adam,
    bounds: Option<ClipBounds>,
}

impl Ddpm {
    pub fn new(cfg: DdpmConfig, geometry: Geometry, spec: &ConditionSpec, seed: u64, dtype: DType) -> Result<Self> {
        let mut store = ParamStore::new(seed, dtype, Device::Cpu);
        let schedule = NoiseSchedule::new(cfg.schedule, cfg.n_steps)?;
        let cond = ConditionEncoder::new(&mut store, "cond", spec, geometry, cfg.width)?;
        let net = Denoiser::new(
            &mut store,
            geometry.features,
            cfg.width,
            cfg.depth,
            cfg.heads,
            cfg.mlp_ratio,
            cfg.zero_init,
        )?;
        let opt = Adam::new(store.vars(), AdamConfig { lr: cfg.lr, ..Default::default() })?;
        Ok(Self {
            cfg,
            geometry,
            store,
            cond,
            net,
            schedule,
            opt,
            bounds: None,
        })
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    pub fn prediction(&self) -> Prediction {
        self.cfg.prediction
    }

    pub fn clip_bounds(&self) -> Option<&ClipBounds> {
        self.bounds.as_ref()
    }

    /// Raw network output at `x_t`.
    pub fn predict(&self, x_t: &Tensor, steps: &[usize], cond: &CondBatch) -> Result<Tensor> {
        let emb = self.cond.encode(cond)?;
        self.net.forward(x_t, steps, emb.as_ref())
    }

    /// Denoising loss at explicit steps and noise: MSE between the network
    /// output and ε or x₀ depending on the prediction mode.
    pub fn loss_with(&self, x0: &Tensor, cond: &CondBatch, steps: &[usize], eps: &Tensor) -> Result<Tensor> {
        let x_t = self.schedule.diffuse(x0, steps, eps)?;
        let out = self.predict(&x_t, steps, cond)?;
        let target = match self.cfg.prediction {
            Prediction::Epsilon => eps,
            Prediction::X0 => x0,
        };
        Ok(mse(&out, target)?)
    }

    fn draw_steps(&self, rng: &mut Rng, n: usize) -> Vec<usize> {
        (0..n).map(|_| rng.random_range(1..=self.schedule.n_steps())).collect()
    }

    fn noise_like(&self, rng: &mut Rng, rows: usize) -> Result<Tensor> {
        randn(
            rng,
            &[rows, self.geometry.length, self.geometry.features],
            self.store.dtype(),
            self.store.device(),
        )
    }

    fn clip(&self, x0: Tensor) -> Result<Tensor> {
        let Some(b) = &self.bounds else { return Ok(x0) };
        let d = self.geometry.features;
        let lo = Tensor::from_vec(b.lo.clone(), (1, 1, d), x0.device())?.to_dtype(x0.dtype())?;
        let hi = Tensor::from_vec(b.hi.clone(), (1, 1, d), x0.device())?.to_dtype(x0.dtype())?;
        Ok(x0.broadcast_maximum(&lo)?.broadcast_minimum(&hi)?)
    }

    fn sample_chunk(&self, cond: &CondBatch, rng: &mut Rng) -> Result<Tensor> {
        let n = cond.len()?;
        let emb = self.cond.encode(cond)?.map(|e| e.detach());
        let known = match cond {
            CondBatch::Masked { observed, mask } => Some((observed, mask, mask.affine(-1.0, 1.0)?)),
            _ => None,
        };
        let mut x = self.noise_like(rng, n)?;
        for t in (1..=self.schedule.n_steps()).rev() {
            let steps = vec![t; n];
            let out = self.net.forward(&x, &steps, emb.as_ref())?.detach();
            let x0 = match self.cfg.prediction {
                Prediction::Epsilon => self.schedule.eps_to_x0(&x, &out, &steps)?,
                Prediction::X0 => out,
            };
            let x0 = self.clip(x0)?;
            let (c0, ct) = self.schedule.posterior_coefficients(t);
            let mean = ((x0 * c0)? + (&x * ct)?)?;
            x = if t > 1 {
                let sd = self.schedule.posterior_variance(t).sqrt();
                (mean + (self.noise_like(rng, n)? * sd)?)?
            } else {
                mean
            };
            if let Some((observed, mask, missing)) = &known {
                // Observed coordinates follow the forward process of the known values.
                let ab = self.schedule.alpha_bar(t - 1);
                let fixed = if t > 1 {
                    ((*observed * ab.sqrt())? + (self.noise_like(rng, n)? * (1.0 - ab).sqrt())?)?
                } else {
                    (*observed).clone()
                };
                x = ((fixed * *mask)? + (&x * missing)?)?;
            }
        }
        Ok(x)
    }
}

impl GenerativeModel for Ddpm {
    fn kind(&self) -> ModelKind {
        ModelKind::Ddpm
    }

    fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn condition_spec(&self) -> &ConditionSpec {
        self.cond.spec()
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn prepare(&mut self, train: &Array3<f64>) -> Result<()> {
        let d = self.geometry.features;
        if train.dim().2 != d || train.is_empty() {
            return Err(ModelError::config("training data does not match the model geometry"));
        }
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        for f in 0..d {
            let col = train.index_axis(Axis(2), f);
            let min = col.fold(f64::INFINITY, |a, &b| a.min(b));
            let max = col.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let sd = col.std(0.0);
            lo.push(min - self.cfg.clip_sd * sd);
            hi.push(max + self.cfg.clip_sd * sd);
        }
        self.bounds = Some(ClipBounds { lo, hi });
        Ok(())
    }

    fn train_step(&mut self, batch: &Batch, step: usize, rng: &mut Rng) -> Result<f64> {
        let b = batch.x.dim(0)?;
        let steps = self.draw_steps(rng, b);
        let eps = self.noise_like(rng, b)?;
        let loss = self.loss_with(&batch.x, &batch.cond, &steps, &eps)?;
        let value = finite_scalar(&loss, "denoising loss", Some(step))?;
        self.opt.backward_step(&loss)?;
        Ok(value)
    }

    fn validation_metric(&self, val: &Batch, rng: &mut Rng) -> Result<f64> {
        let n = val.x.dim(0)?;
        let mut total = 0.0;
        for (start, len) in chunks(n, 256) {
            let steps = self.draw_steps(rng, len);
            let eps = self.noise_like(rng, len)?;
            let loss = self.loss_with(&val.x.narrow(0, start, len)?, &val.cond.narrow(start, len)?, &steps, &eps)?;
            total += finite_scalar(&loss.detach(), "validation denoising loss", None)? * len as f64;
        }
        Ok(total / n as f64)
    }

    fn sample(&self, cond: &CondBatch, rng: &mut Rng) -> Result<Tensor> {
        self.cond.check(cond)?;
        let n = cond.len()?;
        let (t, d) = (self.geometry.length, self.geometry.features);
        if n == 0 {
            return Ok(Tensor::zeros((0, t, d), self.store.dtype(), self.store.device())?);
        }
        let parts = chunks(n, SAMPLE_CHUNK)
            .map(|(start, len)| self.sample_chunk(&cond.narrow(start, len)?, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Tensor::cat(&parts, 0)?)
    }

    fn extra_state(&self) -> serde_json::Value {
        serde_json::to_value(&self.bounds).unwrap_or(serde_json::Value::Null)
    }

    fn set_extra_state(&mut self, state: &serde_json::Value) -> Result<()> {
        self.bounds = serde_json::from_value(state.clone())?;
        Ok(())
    }

    fn set_learning_rate(&mut self, lr: f64) -> Result<()> {
        self.opt = Adam::new(self.store.vars(), AdamConfig { lr, ..Default::default() })?;
        Ok(())
    }
}
