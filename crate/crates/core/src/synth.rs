//! Seedable simulators for the two synthetic datasets, Spiral2D and SineND.

use std::f64::consts::PI;

use ndarray::{Array3, ArrayView2};
use rand::Rng as _;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};
use crate::rng::seeded;
use crate::series::{LabeledSeriesSet, SeriesSet};

/// Two-class spirals: `r(t) = a + b t`, `x1 = ±r cos t`, `x2 = r sin t`, `t ∈ [0, 4π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spiral2DParams {
    pub n_samples: usize,
    pub length: usize,
    #[serde(default = "default_spiral_noise")]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_spiral_noise() -> f64 {
    0.01
}

impl Spiral2DParams {
    pub fn new(n_samples: usize, length: usize, seed: u64) -> Self {
        Self {
            n_samples,
            length,
            noise_std: default_spiral_noise(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(DataError::parameter("spiral n_samples must be >= 1"));
        }
        if self.length < 2 {
            return Err(DataError::parameter("spiral length must be >= 2"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(DataError::parameter("spiral noise_std must be >= 0"));
        }
        Ok(())
    }
}

/// Independent sine waves per dimension, `x(t) = sin(a t + b)` on `t = 0..T-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineNDParams {
    pub n_samples: usize,
    pub length: usize,
    pub dims: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SineNDParams {
    pub fn new(n_samples: usize, length: usize, dims: usize, seed: u64) -> Self {
        Self {
            n_samples,
            length,
            dims,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 || self.length < 1 || self.dims < 1 {
            return Err(DataError::parameter(
                "sine n_samples, length and dims must all be >= 1",
            ));
        }
        Ok(())
    }
}

/// Uniform grid of `length` points over `[0, 4π]`, both endpoints included.
pub fn spiral_grid(length: usize) -> Vec<f64> {
    let step = 4.0 * PI / (length - 1) as f64;
    (0..length).map(|i| i as f64 * step).collect()
}

/// Noise-free spiral points for radius `a + b t` and `x1` sign `sign`.
pub fn spiral_trajectory(a: f64, b: f64, sign: f64, grid: &[f64]) -> Vec<[f64; 2]> {
    grid.iter()
        .map(|&t| {
            let r = a + b * t;
            [sign * r * t.cos(), r * t.sin()]
        })
        .collect()
}

/// Label 0 is the positive `x1` sign (counter-clockwise), label 1 the negative sign.
pub fn gen_spiral2d(params: &Spiral2DParams) -> Result<LabeledSeriesSet> {
    params.validate()?;
    let mut rng = seeded(params.seed);
    let grid = spiral_grid(params.length);
    let a_dist = Uniform::new(0.0, 0.5).expect("valid range");
    let b_dist = Uniform::new(0.0, 0.2).expect("valid range");
    let noise = Normal::new(0.0, params.noise_std).map_err(|e| DataError::parameter(e.to_string()))?;

    let mut values = Array3::zeros((params.n_samples, params.length, 2));
    let mut labels = Vec::with_capacity(params.n_samples);
    for n in 0..params.n_samples {
        let a = a_dist.sample(&mut rng);
        let b = b_dist.sample(&mut rng);
        let label = usize::from(rng.random_bool(0.5));
        let sign = if label == 0 { 1.0 } else { -1.0 };
        for (i, [x1, x2]) in spiral_trajectory(a, b, sign, &grid).into_iter().enumerate() {
            values[[n, i, 0]] = x1;
            values[[n, i, 1]] = x2;
        }
        labels.push(label);
        if params.noise_std > 0.0 {
            for i in 0..params.length {
                values[[n, i, 0]] += noise.sample(&mut rng);
                values[[n, i, 1]] += noise.sample(&mut rng);
            }
        }
    }
    LabeledSeriesSet::new(SeriesSet::new(values)?, labels, 2)
}

/// SineND before the per-series rescaling to `[0, 1]`.
pub fn gen_sine_nd_unnormalized(params: &SineNDParams) -> Result<(Array3<f64>, Vec<(f64, f64)>)> {
    params.validate()?;
    let mut rng = seeded(params.seed);
    let freq = Uniform::new_inclusive(0.05, 0.4).expect("valid range");
    let phase = Uniform::new_inclusive(0.0, 1.5).expect("valid range");
    let mut values = Array3::zeros((params.n_samples, params.length, params.dims));
    let mut drawn = Vec::with_capacity(params.n_samples * params.dims);
    for n in 0..params.n_samples {
        for d in 0..params.dims {
            let a = freq.sample(&mut rng);
            let b = phase.sample(&mut rng);
            for t in 0..params.length {
                values[[n, t, d]] = (a * t as f64 + b).sin();
            }
            drawn.push((a, b));
        }
    }
    Ok((values, drawn))
}

/// Each series is min-max rescaled per dimension so the set lies in `[0, 1]`.
/// A flat series (a single step) maps to 0.5.
pub fn gen_sine_nd(params: &SineNDParams) -> Result<SeriesSet> {
    let (mut values, _) = gen_sine_nd_unnormalized(params)?;
    for n in 0..params.n_samples {
        for d in 0..params.dims {
            let mut lane = values.slice_mut(ndarray::s![n, .., d]);
            let lo = lane.fold(f64::INFINITY, |m, &v| m.min(v));
            let hi = lane.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let range = hi - lo;
            if range > 1e-12 {
                lane.mapv_inplace(|v| ((v - lo) / range).clamp(0.0, 1.0));
            } else {
                lane.fill(0.5);
            }
        }
    }
    SeriesSet::new(values)
}

/// Cross products of successive displacement vectors of a 2-D trajectory.
pub fn turning(sample: ArrayView2<'_, f64>) -> Vec<f64> {
    (1..sample.nrows().saturating_sub(1))
        .map(|i| {
            let (dx1, dy1) = (sample[[i, 0]] - sample[[i - 1, 0]], sample[[i, 1]] - sample[[i - 1, 1]]);
            let (dx2, dy2) = (sample[[i + 1, 0]] - sample[[i, 0]], sample[[i + 1, 1]] - sample[[i, 1]]);
            dx1 * dy2 - dy1 * dx2
        })
        .collect()
}

/// Spiral label recovered from the sign of the summed turning: 0 for
/// counter-clockwise, 1 for clockwise.
pub fn spiral_chirality(sample: ArrayView2<'_, f64>) -> usize {
    usize::from(turning(sample).iter().sum::<f64>() < 0.0)
}
