//! Central finite-difference check of automatic gradients.

use candle_core::{DType, Tensor};
use tsgb_nn::convert::scalar;
use tsgb_nn::ParamStore;

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub checked: usize,
    /// Largest `|auto − numeric| / max(|auto|, |numeric|, floor)`.
    pub max_rel_error: f64,
    pub worst: Option<(String, usize)>,
}

/// Compares the gradient of `loss` with central differences at up to
/// `per_var` evenly spaced coordinates of every variable. The store must be
/// f64.
pub fn gradcheck<F>(store: &ParamStore, loss: F, per_var: usize, step: f64, floor: f64) -> Result<GradcheckReport>
where
    F: Fn() -> Result<Tensor>,
{
    if store.dtype() != DType::F64 {
        return Err(ModelError::config("gradient checks need f64 parameters"));
    }
    let grads = loss()?.backward()?;
    let mut report = GradcheckReport {
        checked: 0,
        max_rel_error: 0.0,
        worst: None,
    };
    for (name, var) in store.named_vars() {
        let shape = var.dims().to_vec();
        let n = var.elem_count();
        let auto: Vec<f64> = match grads.get(var.as_tensor()) {
            Some(g) => g.flatten_all()?.to_vec1()?,
            None => vec![0.0; n],
        };
        let base: Vec<f64> = var.as_tensor().flatten_all()?.to_vec1()?;
        let stride = (n / per_var.max(1)).max(1);
        for k in (0..n).step_by(stride).take(per_var) {
            let eval = |delta: f64| -> Result<f64> {
                let mut v = base.clone();
                v[k] += delta;
                var.set(&Tensor::from_vec(v, shape.as_slice(), var.device())?)?;
                Ok(scalar(&loss()?)?)
            };
            let plus = eval(step)?;
            let minus = eval(-step)?;
            var.set(&Tensor::from_vec(base.clone(), shape.as_slice(), var.device())?)?;
            let numeric = (plus - minus) / (2.0 * step);
            let rel = (auto[k] - numeric).abs() / auto[k].abs().max(numeric.abs()).max(floor);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((name.clone(), k));
            }
        }
    }
    Ok(report)
}
