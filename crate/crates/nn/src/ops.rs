//! Differentiable helpers built from candle primitives only.

use candle_core::{Result, Tensor, D};

/// Softmax over the last dimension; the max shift is detached.
pub fn softmax_last(xs: &Tensor) -> Result<Tensor> {
    let max = xs.max_keepdim(D::Minus1)?.detach();
    let e = xs.broadcast_sub(&max)?.exp()?;
    e.broadcast_div(&e.sum_keepdim(D::Minus1)?)
}

pub fn log_softmax_last(xs: &Tensor) -> Result<Tensor> {
    let max = xs.max_keepdim(D::Minus1)?.detach();
    let shifted = xs.broadcast_sub(&max)?;
    let lse = shifted.exp()?.sum_keepdim(D::Minus1)?.log()?;
    shifted.broadcast_sub(&lse)
}

pub fn sigmoid(xs: &Tensor) -> Result<Tensor> {
    (xs.neg()?.exp()? + 1.0)?.recip()
}

pub fn silu(xs: &Tensor) -> Result<Tensor> {
    xs.mul(&sigmoid(xs)?)
}

pub fn leaky_relu(xs: &Tensor, slope: f64) -> Result<Tensor> {
    // max(x, 0) + slope * min(x, 0)
    let pos = xs.relu()?;
    let neg = (xs - &pos)?;
    pos + (neg * slope)?
}

/// Derivative of `leaky_relu` at `xs`, as a constant tensor.
pub fn leaky_relu_grad(xs: &Tensor, slope: f64) -> Result<Tensor> {
    let pos = xs.gt(0.0)?.to_dtype(xs.dtype())?;
    ((pos * (1.0 - slope))? + slope)?.detach().contiguous()
}

pub fn mse(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    (a - b)?.sqr()?.mean_all()
}

/// Binary cross-entropy on logits, averaged.
pub fn bce_with_logits(logits: &Tensor, targets: &Tensor) -> Result<Tensor> {
    // softplus(x) - t x, with softplus(x) = relu(x) + log(1 + exp(-|x|))
    let softplus = (logits.relu()? + (logits.abs()?.neg()?.exp()? + 1.0)?.log()?)?;
    (softplus - logits.mul(targets)?)?.mean_all()
}

/// Sinusoidal embedding of (possibly fractional) positions, `[n] -> [n, width]`.
pub fn sinusoidal_embedding(positions: &Tensor, width: usize) -> Result<Tensor> {
    let half = width / 2;
    let dev = positions.device();
    let freqs: Vec<f64> = (0..half)
        .map(|i| (-(10_000f64.ln()) * i as f64 / half.max(1) as f64).exp())
        .collect();
    let freqs = Tensor::from_vec(freqs, (1, half), dev)?.to_dtype(positions.dtype())?;
    let args = positions.unsqueeze(1)?.broadcast_mul(&freqs)?;
    let emb = Tensor::cat(&[args.sin()?, args.cos()?], 1)?;
    if width % 2 == 1 {
        let pad = Tensor::zeros((emb.dim(0)?, 1), emb.dtype(), dev)?;
        Tensor::cat(&[emb, pad], 1)
    } else {
        Ok(emb)
    }
}
