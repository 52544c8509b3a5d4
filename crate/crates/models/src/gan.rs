//! Wasserstein GAN with gradient penalty over flattened series.

use candle_core::{DType, Device, Tensor, Var};
use tsgb_core::rng::Rng;
use tsgb_core::SeriesSet;
use tsgb_metrics::marginal_wasserstein;
use tsgb_nn::ops::leaky_relu_grad;
use tsgb_nn::{tensor_to_array3, Activation, Adam, AdamConfig, Mlp, ParamStore};

use crate::condition::{concat_condition, CondBatch, ConditionEncoder, ConditionSpec};
use crate::config::{GanConfig, Geometry, ModelKind};
use crate::error::Result;
use crate::model::{Batch, GenerativeModel};
use crate::util::{finite_scalar, rand_uniform, randn};

pub const CRITIC_SLOPE: f64 = 0.2;
pub const VALIDATION_SAMPLES: usize = 1024;

/// Leaky-ReLU MLP critic with a closed-form input gradient.
pub struct Critic {
    pub mlp: Mlp,
}

impl Critic {
    pub fn new(store: &mut ParamStore, name: &str, dims: &[usize]) -> Result<Self> {
        Ok(Self {
            mlp: Mlp::new(store, name, dims, Activation::LeakyRelu(CRITIC_SLOPE))?,
        })
    }

    /// `[B, in] -> [B, 1]`.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        Ok(self.mlp.forward(input)?)
    }

    /// `∂critic/∂input`, `[B, in]`, built from differentiable operations so
    /// that penalties on it can be backpropagated to the critic weights.
    pub fn input_gradient(&self, input: &Tensor) -> Result<Tensor> {
        let layers = &self.mlp.layers;
        let last = layers.len() - 1;
        let mut pre = Vec::with_capacity(last);
        let mut h = input.clone();
        for layer in &layers[..last] {
            let a = layer.forward(&h)?;
            h = self.mlp.activation.apply(&a)?;
            pre.push(a);
        }
        let b = input.dim(0)?;
        let mut g = layers[last].weight.broadcast_as((b, layers[last].fan_in()))?;
        for (layer, a) in layers[..last].iter().zip(&pre).rev() {
            g = (g * leaky_relu_grad(a, CRITIC_SLOPE)?)?.matmul(&layer.weight)?;
        }
        Ok(g)
    }
}

/// `mean_b (‖∂critic/∂x_b‖ − 1)²` over the first `data_width` input columns.
pub fn gradient_penalty(critic: &Critic, input: &Tensor, data_width: usize) -> Result<Tensor> {
    let g = critic.input_gradient(input)?.narrow(1, 0, data_width)?;
    let norm = (g.sqr()?.sum(1)? + 1e-12)?.sqrt()?;
    Ok((norm - 1.0)?.sqr()?.mean_all()?)
}

/// Loss terms of one critic/generator evaluation.
pub struct WganLosses {
    pub critic: Tensor,
    pub generator: Tensor,
    pub penalty: Tensor,
    /// `mean critic(fake) − mean critic(real)`.
    pub drift: Tensor,
}

pub struct Gan {
    cfg: GanConfig,
    geometry: Geometry,
    store: ParamStore,
    gen_cond: ConditionEncoder,
    critic_cond: ConditionEncoder,
    generator: Mlp,
    critic: Critic,
    gen_opt: Adam,
    critic_opt: Adam,
}

fn vars_with_prefix(store: &ParamStore, prefix: &str) -> Vec<Var> {
    store
        .named_vars()
        .iter()
        .filter(|(n, _)| n.starts_with(prefix))
        .map(|(_, v)| v.clone())
        .collect()
}

impl Gan {
    pub fn new(cfg: GanConfig, geometry: Geometry, spec: &ConditionSpec, seed: u64, dtype: DType) -> Result<Self> {
        let mut store = ParamStore::new(seed, dtype, Device::Cpu);
        let flat = geometry.flat();
        let gen_cond = ConditionEncoder::new(&mut store, "gen.cond", spec, geometry, cfg.cond_width)?;
        let critic_cond = ConditionEncoder::new(&mut store, "critic.cond", spec, geometry, cfg.cond_width)?;
        let mut g_dims = vec![cfg.noise_dim + gen_cond.width()];
        g_dims.extend(&cfg.hidden);
        g_dims.push(flat);
        let mut c_dims = vec![flat + critic_cond.width()];
        c_dims.extend(&cfg.critic_hidden);
        c_dims.push(1);
        let generator = Mlp::new(&mut store, "gen.net", &g_dims, Activation::Relu)?;
        let critic = Critic::new(&mut store, "critic.net", &c_dims)?;
        let (gen_opt, critic_opt) = Self::optimizers(&store, &cfg, cfg.lr)?;
        Ok(Self {
            cfg,
            geometry,
            store,
            gen_cond,
            critic_cond,
            generator,
            critic,
            gen_opt,
            critic_opt,
        })
    }

    fn optimizers(store: &ParamStore, cfg: &GanConfig, lr: f64) -> Result<(Adam, Adam)> {
        let adam = AdamConfig {
            lr,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            clip_norm: Some(1.0),
        };
        Ok((
            Adam::new(vars_with_prefix(store, "gen."), adam)?,
            Adam::new(vars_with_prefix(store, "critic."), adam)?,
        ))
    }

    pub fn critic(&self) -> &Critic {
        &self.critic
    }

    /// Flattened fakes `[B, T·D]` from noise `[B, noise_dim]`.
    pub fn generate(&self, noise: &Tensor, cond: &CondBatch) -> Result<Tensor> {
        let emb = self.gen_cond.encode(cond)?;
        Ok(self.generator.forward(&concat_condition(noise, emb.as_ref())?)?)
    }

    fn critic_input(&self, flat: &Tensor, emb: Option<&Tensor>) -> Result<Tensor> {
        concat_condition(flat, emb)
    }

    /// Critic and generator objectives on flattened `real`/`fake` rows, with
    /// interpolation weights `interp` `[B, 1]` for the penalty.
    pub fn losses(&self, real: &Tensor, fake: &Tensor, cond: &CondBatch, interp: &Tensor) -> Result<WganLosses> {
        let emb = self.critic_cond.encode(cond)?;
        let c_real = self.critic.forward(&self.critic_input(real, emb.as_ref())?)?;
        let c_fake = self.critic.forward(&self.critic_input(fake, emb.as_ref())?)?;
        let mixed = (real.broadcast_mul(interp)? + fake.broadcast_mul(&interp.affine(-1.0, 1.0)?)?)?;
        let penalty = gradient_penalty(&self.critic, &self.critic_input(&mixed, emb.as_ref())?, self.geometry.flat())?;
        let drift = (c_fake.mean_all()? - c_real.mean_all()?)?;
        let critic = (&drift + (&penalty * self.cfg.gp_lambda)?)?;
        let generator = c_fake.mean_all()?.neg()?;
        Ok(WganLosses {
            critic,
            generator,
            penalty,
            drift,
        })
    }

    fn noise(&self, rng: &mut Rng, rows: usize) -> Result<Tensor> {
        randn(rng, &[rows, self.cfg.noise_dim], self.store.dtype(), self.store.device())
    }
}

impl GenerativeModel for Gan {
    fn kind(&self) -> ModelKind {
        ModelKind::Gan
    }

    fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn condition_spec(&self) -> &ConditionSpec {
        self.gen_cond.spec()
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn train_step(&mut self, batch: &Batch, step: usize, rng: &mut Rng) -> Result<f64> {
        let b = batch.x.dim(0)?;
        let real = batch.x.flatten_from(1)?;
        let fake = self.generate(&self.noise(rng, b)?, &batch.cond)?.detach();
        let interp = rand_uniform(rng, &[b, 1], self.store.dtype(), self.store.device())?;
        let losses = self.losses(&real, &fake, &batch.cond, &interp)?;
        let value = finite_scalar(&losses.critic, "critic loss", Some(step))?;
        self.critic_opt.backward_step(&losses.critic)?;
        if step % self.cfg.n_critic == self.cfg.n_critic - 1 {
            let fake = self.generate(&self.noise(rng, b)?, &batch.cond)?;
            let emb = self.critic_cond.encode(&batch.cond)?;
            let g_loss = self.critic.forward(&self.critic_input(&fake, emb.as_ref())?)?.mean_all()?.neg()?;
            finite_scalar(&g_loss, "generator loss", Some(step))?;
            self.gen_opt.backward_step(&g_loss)?;
        }
        Ok(value)
    }

    fn validation_metric(&self, val: &Batch, rng: &mut Rng) -> Result<f64> {
        let n = val.x.dim(0)?.min(VALIDATION_SAMPLES);
        let fake = self.sample(&val.cond.narrow(0, n)?, rng)?;
        let real = SeriesSet::new(tensor_to_array3(&val.x)?)?;
        let fake = SeriesSet::new(tensor_to_array3(&fake)?)
            .map_err(|_| crate::error::ModelError::diverged("GAN validation samples", None))?;
        let w = marginal_wasserstein(&real, &fake)?;
        if !w.is_finite() {
            return Err(crate::error::ModelError::diverged("GAN validation Wasserstein", None));
        }
        Ok(w)
    }

    fn sample(&self, cond: &CondBatch, rng: &mut Rng) -> Result<Tensor> {
        let n = cond.len()?;
        let out = self.generate(&self.noise(rng, n)?, cond)?.detach();
        Ok(out.reshape((n, self.geometry.length, self.geometry.features))?)
    }

    fn set_learning_rate(&mut self, lr: f64) -> Result<()> {
        let (g, c) = Self::optimizers(&self.store, &self.cfg, lr)?;
        self.gen_opt = g;
        self.critic_opt = c;
        Ok(())
    }
}
