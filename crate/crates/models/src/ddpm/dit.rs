//! Transformer denoiser over the time axis with adaptive layer norm.

use candle_core::Tensor;
use tsgb_nn::ops::{silu, sinusoidal_embedding, softmax_last};
use tsgb_nn::{LayerNorm, Linear, ParamStore};

use crate::error::Result;

fn modulate(x: &Tensor, shift: &Tensor, scale: &Tensor) -> Result<Tensor> {
    Ok(x.broadcast_mul(&(scale + 1.0)?)?.broadcast_add(shift)?)
}

/// Splits `[B, k·W]` into `k` chunks of `[B, 1, W]`.
fn chunk_rows(m: &Tensor, k: usize) -> Result<Vec<Tensor>> {
    let w = m.dim(1)? / k;
    (0..k)
        .map(|i| Ok(m.narrow(1, i * w, w)?.unsqueeze(1)?))
        .collect()
}

struct Block {
    norm: LayerNorm,
    modulation: Linear,
    qkv: Linear,
    proj: Linear,
    fc1: Linear,
    fc2: Linear,
    heads: usize,
}

impl Block {
    fn new(store: &mut ParamStore, name: &str, width: usize, heads: usize, mlp_ratio: usize, zero_init: bool) -> Result<Self> {
        let modulation = if zero_init {
            Linear::zeros(store, &format!("{name}.modulation"), width, 6 * width)?
        } else {
            Linear::new(store, &format!("{name}.modulation"), width, 6 * width)?
        };
        Ok(Self {
            norm: LayerNorm::plain(),
            modulation,
            qkv: Linear::new(store, &format!("{name}.qkv"), width, 3 * width)?,
            proj: Linear::new(store, &format!("{name}.proj"), width, width)?,
            fc1: Linear::new(store, &format!("{name}.fc1"), width, mlp_ratio * width)?,
            fc2: Linear::new(store, &format!("{name}.fc2"), mlp_ratio * width, width)?,
            heads,
        })
    }

    fn attention(&self, x: &Tensor) -> Result<Tensor> {
        let (b, t, w) = x.dims3()?;
        let dh = w / self.heads;
        let qkv = self.qkv.forward(x)?.reshape((b, t, 3, self.heads, dh))?;
        let part = |i: usize| -> Result<Tensor> {
            Ok(qkv.narrow(2, i, 1)?.squeeze(2)?.transpose(1, 2)?.contiguous()?)
        };
        let (q, k, v) = (part(0)?, part(1)?, part(2)?);
        let scores = (q.matmul(&k.transpose(2, 3)?.contiguous()?)? / (dh as f64).sqrt())?;
        let out = softmax_last(&scores)?.matmul(&v)?;
        let out = out.transpose(1, 2)?.contiguous()?.reshape((b, t, w))?;
        Ok(self.proj.forward(&out)?)
    }

    fn forward(&self, x: &Tensor, c: &Tensor) -> Result<Tensor> {
        let m = chunk_rows(&self.modulation.forward(&silu(c)?)?, 6)?;
        let h = modulate(&self.norm.forward(x)?, &m[0], &m[1])?;
        let x = (x + self.attention(&h)?.broadcast_mul(&m[2])?)?;
        let h = modulate(&self.norm.forward(&x)?, &m[3], &m[4])?;
        let h = self.fc2.forward(&self.fc1.forward(&h)?.relu()?)?;
        Ok((&x + h.broadcast_mul(&m[5])?)?)
    }
}

pub struct Denoiser {
    input: Linear,
    step_fc1: Linear,
    step_fc2: Linear,
    blocks: Vec<Block>,
    final_norm: LayerNorm,
    final_modulation: Linear,
    output: Linear,
    width: usize,
}

impl Denoiser {
    pub fn new(
        store: &mut ParamStore,
        features: usize,
        width: usize,
        depth: usize,
        heads: usize,
        mlp_ratio: usize,
        zero_init: bool,
    ) -> Result<Self> {
        let blocks = (0..depth)
            .map(|i| Block::new(store, &format!("dit.block{i}"), width, heads, mlp_ratio, zero_init))
            .collect::<Result<_>>()?;
        let (final_modulation, output) = if zero_init {
            (
                Linear::zeros(store, "dit.final.modulation", width, 2 * width)?,
                Linear::zeros(store, "dit.final.output", width, features)?,
            )
        } else {
            (
                Linear::new(store, "dit.final.modulation", width, 2 * width)?,
                Linear::new(store, "dit.final.output", width, features)?,
            )
        };
        Ok(Self {
            input: Linear::new(store, "dit.input", features, width)?,
            step_fc1: Linear::new(store, "dit.step.fc1", width, width)?,
            step_fc2: Linear::new(store, "dit.step.fc2", width, width)?,
            blocks,
            final_norm: LayerNorm::plain(),
            final_modulation,
            output,
            width,
        })
    }

    /// Embedding of diffusion steps, `[B, W]`.
    pub fn step_embedding(&self, steps: &[usize], like: &Tensor) -> Result<Tensor> {
        let pos: Vec<f64> = steps.iter().map(|&t| t as f64).collect();
        let pos = Tensor::from_vec(pos, steps.len(), like.device())?.to_dtype(like.dtype())?;
        let e = sinusoidal_embedding(&pos, self.width)?;
        Ok(self.step_fc2.forward(&silu(&self.step_fc1.forward(&e)?)?)?)
    }

    /// `[B, T, D] -> [B, T, D]`; `cond` is added to the step embedding.
    pub fn forward(&self, x: &Tensor, steps: &[usize], cond: Option<&Tensor>) -> Result<Tensor> {
        let (_, t, _) = x.dims3()?;
        let pos = Tensor::arange(0u32, t as u32, x.device())?.to_dtype(x.dtype())?;
        let pos = sinusoidal_embedding(&pos, self.width)?.unsqueeze(0)?;
        let mut h = self.input.forward(x)?.broadcast_add(&pos)?;
        let mut c = self.step_embedding(steps, x)?;
        if let Some(emb) = cond {
            c = (c + emb)?;
        }
        for block in &self.blocks {
            h = block.forward(&h, &c)?;
        }
        let m = chunk_rows(&self.final_modulation.forward(&silu(&c)?)?, 2)?;
        let h = modulate(&self.final_norm.forward(&h)?, &m[0], &m[1])?;
        Ok(self.output.forward(&h)?)
    }
}
