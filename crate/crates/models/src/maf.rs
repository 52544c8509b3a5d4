//! Masked autoregressive flow over flattened series.

use candle_core::{DType, Device, Tensor, D};
use tsgb_core::rng::Rng;
use tsgb_nn::convert::scalar;
use tsgb_nn::{Adam, AdamConfig, Linear, ParamStore};

use crate::condition::{CondBatch, ConditionEncoder, ConditionSpec};
use crate::config::{Geometry, MafConfig, ModelKind};
use crate::error::{ModelError, Result};
use crate::model::{Batch, GenerativeModel};
use crate::util::{chunks, finite_scalar, randn};

/// Log-scales are squashed into `(−ALPHA_BOUND, ALPHA_BOUND)`.
pub const ALPHA_BOUND: f64 = 5.0;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Standard-normal log-density of each row of `z`, `[B]`.
pub fn standard_normal_log_density(z: &Tensor) -> Result<Tensor> {
    let d = z.dim(1)? as f64;
    Ok(z.sqr()?.sum(D::Minus1)?.affine(-0.5, -0.5 * d * LN_2PI)?)
}

/// Autoregressive degrees for a hidden layer of `width` units over `d` inputs.
fn hidden_degrees(width: usize, d: usize) -> Vec<usize> {
    (0..width)
        .map(|k| if d > 1 { k % (d - 1) + 1 } else { 0 })
        .collect()
}

fn mask_tensor(rows: &[usize], cols: &[usize], strict: bool, dtype: DType) -> Result<Tensor> {
    let data: Vec<f32> = rows
        .iter()
        .flat_map(|&r| {
            cols.iter()
                .map(move |&c| if (strict && r > c) || (!strict && r >= c) { 1.0 } else { 0.0 })
        })
        .collect();
    Ok(Tensor::from_vec(data, (rows.len(), cols.len()), &Device::Cpu)?.to_dtype(dtype)?)
}

struct MaskedLinear {
    linear: Linear,
    mask: Tensor,
}

impl MaskedLinear {
    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let w = (&self.linear.weight * &self.mask)?;
        let b = self.linear.bias.as_ref().expect("masked layers carry a bias");
        Ok(x.matmul(&w.t()?)?.broadcast_add(b)?)
    }
}

/// One MADE network producing per-coordinate shift and log-scale.
struct Made {
    hidden: Vec<MaskedLinear>,
    cond: Option<Linear>,
    output: MaskedLinear,
    d: usize,
}

impl Made {
    fn new(
        store: &mut ParamStore,
        name: &str,
        d: usize,
        widths: &[usize],
        cond_width: usize,
        identity_init: bool,
    ) -> Result<Self> {
        let dtype = store.dtype();
        let input_deg: Vec<usize> = (1..=d).collect();
        let mut prev_deg = input_deg.clone();
        let mut hidden = Vec::with_capacity(widths.len());
        for (i, &w) in widths.iter().enumerate() {
            let deg = hidden_degrees(w, d);
            hidden.push(MaskedLinear {
                linear: Linear::new(store, &format!("{name}.hidden{i}"), prev_deg.len(), w)?,
                mask: mask_tensor(&deg, &prev_deg, false, dtype)?,
            });
            prev_deg = deg;
        }
        let cond = if cond_width > 0 {
            Some(Linear::new(store, &format!("{name}.cond"), cond_width, widths[0])?)
        } else {
            None
        };
        let out_deg: Vec<usize> = input_deg.iter().chain(&input_deg).copied().collect();
        let out_linear = if identity_init {
            Linear::zeros(store, &format!("{name}.output"), prev_deg.len(), 2 * d)?
        } else {
            Linear::new(store, &format!("{name}.output"), prev_deg.len(), 2 * d)?
        };
        Ok(Self {
            hidden,
            cond,
            output: MaskedLinear {
                linear: out_linear,
                mask: mask_tensor(&out_deg, &prev_deg, true, dtype)?,
            },
            d,
        })
    }

    /// `(μ, α)` for inputs `[B, d]`.
    fn params(&self, x: &Tensor, emb: Option<&Tensor>) -> Result<(Tensor, Tensor)> {
        let mut h = self.hidden[0].forward(x)?;
        if let (Some(c), Some(e)) = (&self.cond, emb) {
            h = (h + c.forward(e)?)?;
        }
        h = h.relu()?;
        for layer in &self.hidden[1..] {
            h = layer.forward(&h)?.relu()?;
        }
        let out = self.output.forward(&h)?;
        let mu = out.narrow(1, 0, self.d)?;
        let alpha = (out.narrow(1, self.d, self.d)? / ALPHA_BOUND)?.tanh()? * ALPHA_BOUND;
        Ok((mu, alpha?))
    }
}

pub struct Maf {
    cfg: MafConfig,
    geometry: Geometry,
    store: ParamStore,
    cond: ConditionEncoder,
    layers: Vec<Made>,
    reverse: Tensor,
    opt: Adam,
}

fn check_finite(t: &Tensor, layer: usize, what: &str) -> Result<()> {
    let s = scalar(&t.abs()?.sum_all()?)?;
    if s.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Numerical {
            layer,
            reason: format!("non-finite {what}"),
        })
    }
}

impl Maf {
    pub fn new(cfg: MafConfig, geometry: Geometry, spec: &ConditionSpec, seed: u64, dtype: DType) -> Result<Self> {
        let mut store = ParamStore::new(seed, dtype, Device::Cpu);
        let cond = ConditionEncoder::new(&mut store, "cond", spec, geometry, cfg.cond_width)?;
        let d = geometry.flat();
        let layers = (0..cfg.n_layers)
            .map(|l| Made::new(&mut store, &format!("made{l}"), d, &cfg.hidden, cond.width(), cfg.identity_init))
            .collect::<Result<_>>()?;
        let rev: Vec<u32> = (0..d as u32).rev().collect();
        let reverse = Tensor::from_vec(rev, d, &Device::Cpu)?;
        let opt = Adam::new(store.vars(), AdamConfig { lr: cfg.lr, ..Default::default() })?;
        Ok(Self {
            cfg,
            geometry,
            store,
            cond,
            layers,
            reverse,
            opt,
        })
    }

    pub fn config(&self) -> &MafConfig {
        &self.cfg
    }

    pub fn width(&self) -> usize {
        self.geometry.flat()
    }

    /// `x [B, T·D] -> (z, log_det [B])`.
    pub fn forward(&self, x: &Tensor, cond: &CondBatch) -> Result<(Tensor, Tensor)> {
        let emb = self.cond.encode(cond)?;
        let last = self.layers.len() - 1;
        let mut h = x.clone();
        let mut log_det: Option<Tensor> = None;
        for (l, made) in self.layers.iter().enumerate() {
            let (mu, alpha) = made.params(&h, emb.as_ref())?;
            check_finite(&alpha, l, "log-scale")?;
            h = ((h - mu)? * alpha.neg()?.exp()?)?;
            check_finite(&h, l, "output")?;
            let ld = alpha.sum(D::Minus1)?.neg()?;
            log_det = Some(match log_det {
                Some(acc) => (acc + ld)?,
                None => ld,
            });
            if l < last {
                h = h.index_select(&self.reverse, 1)?;
            }
        }
        Ok((h, log_det.expect("at least one layer")))
    }

    /// Inverse of [`Maf::forward`], solved coordinate by coordinate.
    pub fn inverse(&self, z: &Tensor, cond: &CondBatch) -> Result<Tensor> {
        let emb = self.cond.encode(cond)?.map(|e| e.detach());
        let last = self.layers.len() - 1;
        let mut h = z.clone();
        for (l, made) in self.layers.iter().enumerate().rev() {
            if l < last {
                h = h.index_select(&self.reverse, 1)?;
            }
            let mut x = h.zeros_like()?;
            for _ in 0..made.d {
                let (mu, alpha) = made.params(&x, emb.as_ref())?;
                x = ((&h * alpha.exp()?)? + mu)?.detach();
            }
            check_finite(&x, l, "inverse")?;
            h = x;
        }
        Ok(h)
    }

    /// Log-likelihood of each row, `[B]`.
    pub fn log_likelihood(&self, x: &Tensor, cond: &CondBatch) -> Result<Tensor> {
        let (z, log_det) = self.forward(x, cond)?;
        Ok((standard_normal_log_density(&z)? + log_det)?)
    }

    /// Mean negative log-likelihood per coordinate.
    pub fn nll_per_dim(&self, x: &Tensor, cond: &CondBatch) -> Result<Tensor> {
        let ll = self.log_likelihood(&x.flatten_from(1)?, cond)?;
        Ok((ll.mean_all()? / -(self.width() as f64))?)
    }
}

impl GenerativeModel for Maf {
    fn kind(&self) -> ModelKind {
        ModelKind::Maf
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

    fn train_step(&mut self, batch: &Batch, step: usize, _rng: &mut Rng) -> Result<f64> {
        let loss = self.nll_per_dim(&batch.x, &batch.cond)?;
        let value = finite_scalar(&loss, "flow NLL", Some(step))?;
        self.opt.backward_step(&loss)?;
        Ok(value)
    }

    fn validation_metric(&self, val: &Batch, _rng: &mut Rng) -> Result<f64> {
        let n = val.x.dim(0)?;
        let mut total = 0.0;
        for (start, len) in chunks(n, 512) {
            let loss = self.nll_per_dim(&val.x.narrow(0, start, len)?, &val.cond.narrow(start, len)?)?;
            total += finite_scalar(&loss.detach(), "validation NLL", None)? * len as f64;
        }
        Ok(total / n as f64)
    }

    fn sample(&self, cond: &CondBatch, rng: &mut Rng) -> Result<Tensor> {
        self.cond.check(cond)?;
        let n = cond.len()?;
        let z = randn(rng, &[n, self.width()], self.store.dtype(), self.store.device())?;
        let x = self.inverse(&z, cond)?;
        Ok(x.reshape((n, self.geometry.length, self.geometry.features))?)
    }

    fn set_learning_rate(&mut self, lr: f64) -> Result<()> {
        self.opt = Adam::new(self.store.vars(), AdamConfig { lr, ..Default::default() })?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn flow(identity: bool, d: usize, seed: u64) -> Maf {
        let cfg = MafConfig {
            n_layers: 3,
            hidden: vec![16, 16],
            identity_init: identity,
            ..Default::default()
        };
        Maf::new(cfg, Geometry::new(d, 1), &ConditionSpec::None, seed, DType::F64).unwrap()
    }

    fn max_abs(a: &Tensor, b: &Tensor) -> f64 {
        scalar(&(a - b).unwrap().abs().unwrap().max_all().unwrap()).unwrap()
    }

    #[test]
    fn identity_initialized_flow() {
        let m = flow(true, 6, 0);
        let x = randn(&mut Rng::seed_from_u64(1), &[4, 6], DType::F64, &Device::Cpu).unwrap();
        let (z, ld) = m.forward(&x, &CondBatch::None(4)).unwrap();
        // two reversals between three layers cancel
        assert_eq!(max_abs(&z, &x), 0.0);
        assert_eq!(ld.to_vec1::<f64>().unwrap(), vec![0.0; 4]);
        let back = m.inverse(&z, &CondBatch::None(4)).unwrap();
        assert_eq!(max_abs(&back, &x), 0.0);
    }

    #[test]
    fn base_density_at_mode() {
        let z = Tensor::zeros((1, 7), DType::F64, &Device::Cpu).unwrap();
        let v = standard_normal_log_density(&z).unwrap().to_vec1::<f64>().unwrap()[0];
        assert!((v + 3.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
    }

    #[test]
    fn connectivity_is_autoregressive() {
        let m = flow(false, 5, 3);
        let made = &m.layers[0];
        let x = randn(&mut Rng::seed_from_u64(2), &[1, 5], DType::F64, &Device::Cpu).unwrap();
        let (mu0, a0) = made.params(&x, None).unwrap();
        for j in 0..5 {
            let mut v = x.to_vec2::<f64>().unwrap();
            v[0][j] += 1.0;
            let xp = Tensor::new(v, &Device::Cpu).unwrap();
            let (mu1, a1) = made.params(&xp, None).unwrap();
            let (mu0v, mu1v) = (mu0.to_vec2::<f64>().unwrap(), mu1.to_vec2::<f64>().unwrap());
            let (a0v, a1v) = (a0.to_vec2::<f64>().unwrap(), a1.to_vec2::<f64>().unwrap());
            for i in 0..=j {
                assert_eq!(mu0v[0][i], mu1v[0][i], "output {i} depends on input {j}");
                assert_eq!(a0v[0][i], a1v[0][i]);
            }
        }
    }

    #[test]
    fn round_trip_and_batch_independence() {
        let m = flow(false, 8, 4);
        let mut rng = Rng::seed_from_u64(5);
        let z = randn(&mut rng, &[6, 8], DType::F64, &Device::Cpu).unwrap();
        let x = m.inverse(&z, &CondBatch::None(6)).unwrap();
        let (z2, _) = m.forward(&x, &CondBatch::None(6)).unwrap();
        assert!(max_abs(&z, &z2) <= 1e-4);
        let one = m.inverse(&z.narrow(0, 2, 1).unwrap(), &CondBatch::None(1)).unwrap();
        assert!(max_abs(&one, &x.narrow(0, 2, 1).unwrap()) <= 1e-12);
    }
}
