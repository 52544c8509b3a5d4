use ndarray::{s, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};
use crate::series::{Mask, SeriesSet};

/// Sliding windows of length `length` with step `stride` over every series
/// of `raw`, without padding. Windows of sample 0 come first.
pub fn make_windows(raw: &SeriesSet, length: usize, stride: usize) -> Result<SeriesSet> {
    let starts = window_starts(raw.len_t(), length, stride)?;
    let (n, _, d) = raw.dim();
    let mut out = Array3::zeros((n * starts.len(), length, d));
    let mut k = 0;
    for i in 0..n {
        for &st in &starts {
            out.slice_mut(s![k, .., ..])
                .assign(&raw.values().slice(s![i, st..st + length, ..]));
            k += 1;
        }
    }
    SeriesSet::new(out)
}

/// Same windowing applied to a mask, so windows and masks stay aligned.
pub fn make_mask_windows(mask: &Mask, length: usize, stride: usize) -> Result<Mask> {
    let (n, t, d) = mask.dim();
    let starts = window_starts(t, length, stride)?;
    let mut out = Array3::zeros((n * starts.len(), length, d));
    let mut k = 0;
    for i in 0..n {
        for &st in &starts {
            out.slice_mut(s![k, .., ..])
                .assign(&mask.bits().slice(s![i, st..st + length, ..]));
            k += 1;
        }
    }
    Mask::new(out)
}

fn window_starts(raw_len: usize, length: usize, stride: usize) -> Result<Vec<usize>> {
    if length == 0 || stride == 0 {
        return Err(DataError::parameter("window length and stride must be >= 1"));
    }
    if length > raw_len {
        return Err(DataError::sizing(format!(
            "window length {length} exceeds series length {raw_len}"
        )));
    }
    let count = (raw_len - length) / stride + 1;
    Ok((0..count).map(|i| i * stride).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPair {
    pub history: SeriesSet,
    pub target: SeriesSet,
}

impl ForecastPair {
    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            history: self.history.select(indices),
            target: self.target.select(indices),
        }
    }
}

/// Splits each window into its first `l_obs` and last `l_pred` steps.
pub fn make_forecast_pairs(set: &SeriesSet, l_obs: usize, l_pred: usize) -> Result<ForecastPair> {
    let t = set.len_t();
    if l_obs == 0 || l_pred == 0 || l_obs + l_pred != t {
        return Err(DataError::sizing(format!(
            "window length {t} != l_obs {l_obs} + l_pred {l_pred}"
        )));
    }
    Ok(ForecastPair {
        history: set.slice_time(0, l_obs),
        target: set.slice_time(l_obs, t),
    })
}
