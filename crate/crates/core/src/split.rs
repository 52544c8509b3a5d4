use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};
use crate::rng::seeded;
use crate::series::SeriesSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Chronological,
    Shuffled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub ratios: [f64; 3],
    pub mode: SplitMode,
    #[serde(default)]
    pub seed: u64,
}

impl SplitSpec {
    pub fn chronological() -> Self {
        Self {
            ratios: [0.8, 0.1, 0.1],
            mode: SplitMode::Chronological,
            seed: 0,
        }
    }

    pub fn shuffled(seed: u64) -> Self {
        Self {
            ratios: [0.8, 0.1, 0.1],
            mode: SplitMode::Shuffled,
            seed,
        }
    }

    /// Sizes of (train, val, test) for `n` windows.
    pub fn sizes(&self, n: usize) -> Result<[usize; 3]> {
        if self.ratios.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(DataError::sizing("split ratios must be nonnegative"));
        }
        let total: f64 = self.ratios.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(DataError::sizing(format!("split ratios sum to {total}, not 1")));
        }
        let train = (n as f64 * self.ratios[0]).round() as usize;
        let val = (n as f64 * self.ratios[1]).round() as usize;
        if train + val >= n || train == 0 || val == 0 {
            return Err(DataError::sizing(format!(
                "ratios {:?} leave an empty split for {n} windows",
                self.ratios
            )));
        }
        Ok([train, val, n - train - val])
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: SeriesSet,
    pub val: SeriesSet,
    pub test: SeriesSet,
    /// Source indices of each split, in split order.
    pub indices: [Vec<usize>; 3],
}

/// Partitions the windows of `set`. Chronological mode keeps index order;
/// shuffled mode permutes with a seeded generator first.
pub fn split_dataset(set: &SeriesSet, spec: &SplitSpec) -> Result<Splits> {
    let indices = split_indices(set.len(), spec)?;
    Ok(Splits {
        train: set.select(&indices[0]),
        val: set.select(&indices[1]),
        test: set.select(&indices[2]),
        indices,
    })
}

pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<[Vec<usize>; 3]> {
    let [a, b, _] = spec.sizes(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    if spec.mode == SplitMode::Shuffled {
        order.shuffle(&mut seeded(spec.seed));
    }
    let test = order.split_off(a + b);
    let val = order.split_off(a);
    Ok([order, val, test])
}
