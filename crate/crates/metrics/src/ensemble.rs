use ndarray::{Array3, Array4, Axis};

use crate::error::{MetricError, Result};

/// Pointwise summary of an ensemble over its draw axis.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub mean: Array3<f64>,
    /// `(level, quantile array)` in the order the levels were requested.
    pub quantiles: Vec<(f64, Array3<f64>)>,
}

impl EnsembleStats {
    pub fn quantile(&self, level: f64) -> Option<&Array3<f64>> {
        self.quantiles.iter().find(|(l, _)| *l == level).map(|(_, q)| q)
    }
}

/// Empirical quantile of already sorted values with linear interpolation
/// between order statistics at position `level * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = level * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn check_levels(levels: &[f64]) -> Result<()> {
    for &l in levels {
        if !(l > 0.0 && l < 1.0) {
            return Err(MetricError::Parameter(format!("quantile level {l} outside (0, 1)")));
        }
    }
    Ok(())
}

/// Mean and quantiles of `draws [S, N, T, D]` over the draw axis.
pub fn ensemble_stats(draws: &Array4<f64>, levels: &[f64]) -> Result<EnsembleStats> {
    let (s, n, t, d) = draws.dim();
    if s == 0 {
        return Err(MetricError::Parameter("empty draw axis".into()));
    }
    check_levels(levels)?;
    let mut mean = Array3::<f64>::zeros((n, t, d));
    for draw in draws.axis_iter(Axis(0)) {
        mean += &draw;
    }
    mean /= s as f64;

    let mut quantiles: Vec<(f64, Array3<f64>)> =
        levels.iter().map(|&l| (l, Array3::zeros((n, t, d)))).collect();
    let mut buf = vec![0.0; s];
    for i in 0..n {
        for j in 0..t {
            for k in 0..d {
                for (b, slot) in buf.iter_mut().enumerate() {
                    *slot = draws[[b, i, j, k]];
                }
                buf.sort_by(f64::total_cmp);
                for (level, q) in quantiles.iter_mut() {
                    q[[i, j, k]] = quantile_sorted(&buf, *level);
                }
            }
        }
    }
    Ok(EnsembleStats { mean, quantiles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_draw_is_its_own_summary() {
        let draws = Array4::from_shape_fn((1, 2, 3, 2), |(_, i, j, k)| (i * 6 + j * 2 + k) as f64 * 0.3);
        let stats = ensemble_stats(&draws, &[0.1, 0.5, 0.9]).unwrap();
        let only = draws.index_axis(Axis(0), 0);
        assert_eq!(stats.mean, only);
        for (_, q) in &stats.quantiles {
            assert_eq!(q, &only);
        }
    }

    #[test]
    fn two_point_median_is_midpoint() {
        let mut draws = Array4::<f64>::zeros((2, 1, 4, 1));
        draws.index_axis_mut(Axis(0), 1).fill(1.0);
        let stats = ensemble_stats(&draws, &[0.5]).unwrap();
        assert!(stats.quantile(0.5).unwrap().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn mean_matches_loop() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draws = Array4::from_shape_simple_fn((7, 3, 5, 2), || rng.random_range(-3.0f64..3.0));
        let stats = ensemble_stats(&draws, &[]).unwrap();
        for i in 0..3 {
            for j in 0..5 {
                for k in 0..2 {
                    let mut acc = 0.0;
                    for s in 0..7 {
                        acc += draws[[s, i, j, k]];
                    }
                    assert!((stats.mean[[i, j, k]] - acc / 7.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let empty = Array4::<f64>::zeros((0, 1, 1, 1));
        assert!(ensemble_stats(&empty, &[0.5]).is_err());
        let one = Array4::<f64>::zeros((1, 1, 1, 1));
        assert!(ensemble_stats(&one, &[1.0]).is_err());
        assert!(ensemble_stats(&one, &[0.0]).is_err());
    }

    proptest! {
        #[test]
        fn quantiles_are_monotone(values in prop::collection::vec(-10.0f64..10.0, 1..40), a in 0.01f64..0.99, b in 0.01f64..0.99) {
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let ql = quantile_sorted(&sorted, lo);
            let qh = quantile_sorted(&sorted, hi);
            prop_assert!(ql <= qh);
            prop_assert!(ql >= sorted[0] && qh <= sorted[sorted.len() - 1]);
        }
    }
}
