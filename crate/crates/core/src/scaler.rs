//! Per-feature normalization fitted on the training split only.

use ndarray::{s, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};
use crate::series::{Mask, SeriesSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerMethod {
    Zscore,
    Minmax,
}

/// `transform(x) = (x - offset) / scale`, per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub method: ScalerMethod,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
    /// Features whose spread was zero; their scale is clamped to 1.
    pub clamped: Vec<usize>,
}

impl Scaler {
    pub fn fit(train: &SeriesSet, method: ScalerMethod) -> Result<Self> {
        Self::fit_masked(train, None, method)
    }

    /// Fits on observed entries only when a mask is given.
    pub fn fit_masked(train: &SeriesSet, mask: Option<&Mask>, method: ScalerMethod) -> Result<Self> {
        if train.is_empty() {
            return Err(DataError::parameter("cannot fit a scaler on an empty set"));
        }
        if let Some(m) = mask {
            if m.dim() != train.dim() {
                return Err(DataError::sizing("mask shape differs from training set"));
            }
        }
        let d = train.n_features();
        let mut offset = Vec::with_capacity(d);
        let mut scale = Vec::with_capacity(d);
        let mut clamped = Vec::new();
        for j in 0..d {
            let col = train.values().slice(s![.., .., j]);
            let vals: Vec<f64> = match mask {
                Some(m) => col
                    .iter()
                    .zip(m.bits().slice(s![.., .., j]).iter())
                    .filter(|(_, &b)| b == 1)
                    .map(|(v, _)| *v)
                    .collect(),
                None => col.iter().copied().collect(),
            };
            if vals.is_empty() {
                offset.push(0.0);
                scale.push(1.0);
                clamped.push(j);
                continue;
            }
            let (o, sc) = match method {
                ScalerMethod::Zscore => {
                    let n = vals.len() as f64;
                    let mean = vals.iter().sum::<f64>() / n;
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    (mean, var.sqrt())
                }
                ScalerMethod::Minmax => {
                    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi - lo)
                }
            };
            offset.push(o);
            if sc > 1e-12 * (1.0 + o.abs()) {
                scale.push(sc);
            } else {
                log::warn!("feature {j} has zero spread; scale clamped to 1");
                scale.push(1.0);
                clamped.push(j);
            }
        }
        Ok(Self {
            method,
            offset,
            scale,
            clamped,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            method: ScalerMethod::Zscore,
            offset: vec![0.0; d],
            scale: vec![1.0; d],
            clamped: Vec::new(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.offset.len()
    }

    fn check(&self, set: &Array3<f64>) -> Result<()> {
        if set.dim().2 != self.n_features() {
            return Err(DataError::sizing(format!(
                "scaler fitted on {} features, got {}",
                self.n_features(),
                set.dim().2
            )));
        }
        Ok(())
    }

    pub fn apply_array(&self, values: &Array3<f64>) -> Result<Array3<f64>> {
        self.check(values)?;
        let mut out = values.clone();
        for ((_, _, j), v) in out.indexed_iter_mut() {
            *v = (*v - self.offset[j]) / self.scale[j];
        }
        Ok(out)
    }

    pub fn invert_array(&self, values: &Array3<f64>) -> Result<Array3<f64>> {
        self.check(values)?;
        let mut out = values.clone();
        for ((_, _, j), v) in out.indexed_iter_mut() {
            *v = *v * self.scale[j] + self.offset[j];
        }
        Ok(out)
    }

    pub fn apply(&self, set: &SeriesSet) -> Result<SeriesSet> {
        SeriesSet::new_allow_empty(self.apply_array(set.values())?)
    }

    pub fn invert(&self, set: &SeriesSet) -> Result<SeriesSet> {
        SeriesSet::new_allow_empty(self.invert_array(set.values())?)
    }
}
