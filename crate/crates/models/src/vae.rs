//! β-VAE over flattened series.

use candle_core::{DType, Device, Tensor, D};
use tsgb_core::rng::Rng;
use tsgb_nn::{Activation, Adam, AdamConfig, Mlp, ParamStore};

use crate::condition::{concat_condition, CondBatch, ConditionEncoder, ConditionSpec};
use crate::config::{Geometry, ModelKind, VaeConfig};
use crate::error::Result;
use crate::model::{Batch, GenerativeModel};
use crate::util::{chunks, finite_scalar, randn};

/// Closed-form `KL(N(μ, σ²) ‖ N(0, I))` summed over the last axis and
/// averaged over rows, with `logvar = ln σ²`.
pub fn kl_diag_gaussian(mu: &Tensor, logvar: &Tensor) -> Result<Tensor> {
    let per_dim = ((mu.sqr()? + logvar.exp()?)? - logvar)?.affine(0.5, -0.5)?;
    Ok(per_dim.sum(D::Minus1)?.mean_all()?)
}

pub struct Vae {
    cfg: VaeConfig,
    geometry: Geometry,
    store: ParamStore,
    cond: ConditionEncoder,
    encoder: Mlp,
    decoder: Mlp,
    opt: Adam,
}

impl Vae {
    pub fn new(cfg: VaeConfig, geometry: Geometry, spec: &ConditionSpec, seed: u64, dtype: DType) -> Result<Self> {
        let mut store = ParamStore::new(seed, dtype, Device::Cpu);
        let cond = ConditionEncoder::new(&mut store, "cond", spec, geometry, cfg.cond_width)?;
        let c = cond.width();
        let mut enc_dims = vec![geometry.flat() + c];
        enc_dims.extend(&cfg.hidden);
        enc_dims.push(2 * cfg.latent);
        let mut dec_dims = vec![cfg.latent + c];
        dec_dims.extend(cfg.hidden.iter().rev());
        dec_dims.push(geometry.flat());
        let encoder = Mlp::new(&mut store, "encoder", &enc_dims, Activation::Relu)?;
        let decoder = Mlp::new(&mut store, "decoder", &dec_dims, Activation::Relu)?;
        let opt = Adam::new(store.vars(), AdamConfig { lr: cfg.lr, ..Default::default() })?;
        Ok(Self {
            cfg,
            geometry,
            store,
            cond,
            encoder,
            decoder,
            opt,
        })
    }

    pub fn config(&self) -> &VaeConfig {
        &self.cfg
    }

    /// Posterior parameters `(μ, ln σ²)` for flattened inputs.
    pub fn posterior(&self, x_flat: &Tensor, emb: Option<&Tensor>) -> Result<(Tensor, Tensor)> {
        let h = self.encoder.forward(&concat_condition(x_flat, emb)?)?;
        let l = self.cfg.latent;
        Ok((h.narrow(1, 0, l)?, h.narrow(1, l, l)?))
    }

    pub fn decode(&self, z: &Tensor, emb: Option<&Tensor>) -> Result<Tensor> {
        Ok(self.decoder.forward(&concat_condition(z, emb)?)?)
    }

    /// `(reconstruction, kl)` with reparameterization noise `eps` `[B, latent]`.
    /// Reconstruction is the squared error summed over a series, averaged
    /// over the batch.
    pub fn elbo_terms(&self, x: &Tensor, cond: &CondBatch, eps: &Tensor) -> Result<(Tensor, Tensor)> {
        let emb = self.cond.encode(cond)?;
        let flat = x.flatten_from(1)?;
        let (mu, logvar) = self.posterior(&flat, emb.as_ref())?;
        let z = (&mu + (logvar.affine(0.5, 0.0)?.exp()? * eps)?)?;
        let recon = self.decode(&z, emb.as_ref())?;
        let rec = (recon - &flat)?.sqr()?.sum(D::Minus1)?.mean_all()?;
        Ok((rec, kl_diag_gaussian(&mu, &logvar)?))
    }

    pub fn loss(&self, x: &Tensor, cond: &CondBatch, eps: &Tensor) -> Result<Tensor> {
        let (rec, kl) = self.elbo_terms(x, cond, eps)?;
        Ok((rec + (kl * self.cfg.beta)?)?)
    }

    fn eps(&self, rng: &mut Rng, rows: usize) -> Result<Tensor> {
        randn(rng, &[rows, self.cfg.latent], self.store.dtype(), self.store.device())
    }
}

impl GenerativeModel for Vae {
    fn kind(&self) -> ModelKind {
        ModelKind::Vae
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

    fn train_step(&mut self, batch: &Batch, step: usize, rng: &mut Rng) -> Result<f64> {
        let eps = self.eps(rng, batch.x.dim(0)?)?;
        let loss = self.loss(&batch.x, &batch.cond, &eps)?;
        let value = finite_scalar(&loss, "VAE loss", Some(step))?;
        self.opt.backward_step(&loss)?;
        Ok(value)
    }

    fn validation_metric(&self, val: &Batch, rng: &mut Rng) -> Result<f64> {
        let n = val.x.dim(0)?;
        let mut total = 0.0;
        for (start, len) in chunks(n, 512) {
            let eps = self.eps(rng, len)?;
            let loss = self.loss(&val.x.narrow(0, start, len)?, &val.cond.narrow(start, len)?, &eps)?;
            total += finite_scalar(&loss.detach(), "VAE validation ELBO", None)? * len as f64;
        }
        Ok(total / n as f64)
    }

    fn sample(&self, cond: &CondBatch, rng: &mut Rng) -> Result<Tensor> {
        let n = cond.len()?;
        let emb = self.cond.encode(cond)?;
        let z = self.eps(rng, n)?;
        let out = self.decode(&z, emb.as_ref())?.detach();
        Ok(out.reshape((n, self.geometry.length, self.geometry.features))?)
    }

    fn set_learning_rate(&mut self, lr: f64) -> Result<()> {
        self.opt = Adam::new(self.store.vars(), AdamConfig { lr, ..Default::default() })?;
        Ok(())
    }
}
