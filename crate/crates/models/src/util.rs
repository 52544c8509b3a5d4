use candle_core::{DType, Device, Tensor};
use rand_distr::{Distribution, StandardNormal, Uniform};
use tsgb_core::rng::Rng;
use tsgb_nn::convert::scalar;

use crate::error::{ModelError, Result};

/// Standard-normal tensor drawn from a seeded stream.
pub fn randn(rng: &mut Rng, shape: &[usize], dtype: DType, device: &Device) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    Ok(Tensor::from_vec(data, shape, device)?.to_dtype(dtype)?)
}

pub fn rand_uniform(rng: &mut Rng, shape: &[usize], dtype: DType, device: &Device) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    let dist = Uniform::new(0.0, 1.0).expect("valid range");
    let data: Vec<f64> = (0..n).map(|_| dist.sample(rng)).collect();
    Ok(Tensor::from_vec(data, shape, device)?.to_dtype(dtype)?)
}

/// Reads a scalar loss, failing on non-finite values.
pub fn finite_scalar(t: &Tensor, what: &str, batch: Option<usize>) -> Result<f64> {
    let v = scalar(t)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ModelError::diverged(what, batch))
    }
}

/// Per-row constant `[B, 1, 1]` from host values.
pub fn row_coefficients(values: &[f64], dtype: DType, device: &Device) -> Result<Tensor> {
    Ok(Tensor::from_vec(values.to_vec(), (values.len(), 1, 1), device)?.to_dtype(dtype)?)
}

/// Splits `0..n` into consecutive chunks of at most `size`.
pub fn chunks(n: usize, size: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).step_by(size.max(1)).map(move |s| (s, (n - s).min(size)))
}
