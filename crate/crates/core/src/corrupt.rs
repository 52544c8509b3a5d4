//! Task-specific corruption: random missingness, irregular step dropping,
//! and the mask assembly used to score imputations.

use ndarray::{Array2, Array3, Zip};
use rand::Rng as _;

use crate::error::{DataError, Result};
use crate::rng::seeded;
use crate::series::{Mask, SeriesSet};

/// Masks each entry independently with probability `rate` (MCAR). Returns
/// the zero-filled observed series `X ⊙ m` and the mask `m`.
pub fn simulate_missing(set: &SeriesSet, rate: f64, seed: u64) -> Result<(SeriesSet, Mask)> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(DataError::parameter(format!("missing rate {rate} outside [0, 1]")));
    }
    let mut rng = seeded(seed);
    let bits = Array3::from_shape_simple_fn(set.dim(), || u8::from(!rng.random_bool(rate)));
    let observed = Zip::from(set.values())
        .and(&bits)
        .map_collect(|&v, &b| if b == 1 { v } else { 0.0 });
    Ok((SeriesSet::new_allow_empty(observed)?, Mask::new(bits)?))
}

/// Series with whole time steps removed. `values` keeps the fixed grid; the
/// dropped steps are zeroed and flagged 0 in `mask`.
#[derive(Debug, Clone)]
pub struct IrregularSet {
    pub values: SeriesSet,
    pub mask: Mask,
    /// Surviving grid positions of each sample, strictly increasing.
    pub timestamps: Vec<Vec<f64>>,
}

impl IrregularSet {
    /// The surviving steps of sample `i` as `(timestamps, values [k, D])`.
    pub fn observed(&self, i: usize) -> (Vec<f64>, Array2<f64>) {
        let ts = self.timestamps[i].clone();
        let d = self.values.n_features();
        let s = self.values.sample(i);
        let rows = Array2::from_shape_fn((ts.len(), d), |(k, j)| s[[ts[k] as usize, j]]);
        (ts, rows)
    }
}

/// Drops whole time steps independently with probability `drop_rate`. A
/// sample left with fewer than two steps has its pattern redrawn.
pub fn simulate_irregular(set: &SeriesSet, drop_rate: f64, seed: u64) -> Result<IrregularSet> {
    if !(0.0..1.0).contains(&drop_rate) {
        return Err(DataError::parameter(format!("drop rate {drop_rate} outside [0, 1)")));
    }
    let (n, t, d) = set.dim();
    let grid: Vec<f64> = match set.timestamps() {
        Some(ts) => ts.to_vec(),
        None => (0..t).map(|i| i as f64).collect(),
    };
    if t < 2 {
        return Err(DataError::sizing("irregular dropping needs at least 2 steps"));
    }
    let mut rng = seeded(seed);
    let mut values = set.values().clone();
    let mut bits = Array3::<u8>::ones((n, t, d));
    let mut timestamps = Vec::with_capacity(n);
    for i in 0..n {
        let keep = loop {
            let keep: Vec<bool> = (0..t).map(|_| !rng.random_bool(drop_rate)).collect();
            if keep.iter().filter(|&&k| k).count() >= 2 {
                break keep;
            }
        };
        let mut ts = Vec::new();
        for (step, &k) in keep.iter().enumerate() {
            if k {
                ts.push(grid[step]);
            } else {
                for j in 0..d {
                    values[[i, step, j]] = 0.0;
                    bits[[i, step, j]] = 0;
                }
            }
        }
        timestamps.push(ts);
    }
    Ok(IrregularSet {
        values: SeriesSet::new(values)?,
        mask: Mask::new(bits)?,
        timestamps,
    })
}

/// `X ⊙ m + X′ ⊙ (1 − m)`: observed entries from `observed`, the rest from `imputed`.
pub fn assemble_imputation(observed: &SeriesSet, mask: &Mask, imputed: &SeriesSet) -> Result<SeriesSet> {
    if observed.dim() != mask.dim() || imputed.dim() != mask.dim() {
        return Err(DataError::sizing(format!(
            "shape mismatch: observed {:?}, mask {:?}, imputed {:?}",
            observed.dim(),
            mask.dim(),
            imputed.dim()
        )));
    }
    let out = Zip::from(observed.values())
        .and(mask.bits())
        .and(imputed.values())
        .map_collect(|&x, &m, &y| if m == 1 { x } else { y });
    SeriesSet::new_allow_empty(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_set(n: usize, t: usize, d: usize, seed: u64) -> SeriesSet {
        let mut rng = seeded(seed);
        SeriesSet::from_vec(n, t, d, (0..n * t * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn missing_rate_extremes() {
        let set = random_set(4, 5, 2, 0);
        let (x, m) = simulate_missing(&set, 0.0, 1).unwrap();
        assert_eq!(m.count_missing(), 0);
        assert_eq!(x, set);
        let (x, m) = simulate_missing(&set, 1.0, 1).unwrap();
        assert_eq!(m.count_observed(), 0);
        assert!(x.values().iter().all(|&v| v == 0.0));
        assert!(simulate_missing(&set, 1.5, 1).is_err());
        assert!(simulate_missing(&set, -0.1, 1).is_err());
    }

    #[test]
    fn missing_fraction_concentrates() {
        let set = random_set(100, 25, 4, 2);
        let (_, m) = simulate_missing(&set, 0.2, 3).unwrap();
        let n = 10_000.0;
        let frac = m.count_missing() as f64 / n;
        let sd = (0.2 * 0.8 / n).sqrt();
        assert!((frac - 0.2).abs() <= 3.0 * sd, "fraction {frac}");
    }

    #[test]
    fn irregular_identity_and_order() {
        let set = random_set(3, 10, 2, 4);
        let irr = simulate_irregular(&set, 0.0, 0).unwrap();
        for ts in &irr.timestamps {
            assert_eq!(ts, &(0..10).map(|i| i as f64).collect::<Vec<_>>());
        }
        let irr = simulate_irregular(&set, 0.6, 9).unwrap();
        for (i, ts) in irr.timestamps.iter().enumerate() {
            assert!(ts.len() >= 2);
            assert!(ts.windows(2).all(|w| w[1] > w[0]));
            let (_, rows) = irr.observed(i);
            for (k, &step) in ts.iter().enumerate() {
                assert_eq!(rows[[k, 0]], set.values()[[i, step as usize, 0]]);
            }
        }
        assert!(simulate_irregular(&set, 1.0, 0).is_err());
    }

    #[test]
    fn irregular_surviving_fraction() {
        let set = SeriesSet::zeros(1, 1000, 1);
        let irr = simulate_irregular(&set, 0.3, 17).unwrap();
        let frac = irr.timestamps[0].len() as f64 / 1000.0;
        let sd = (0.3 * 0.7 / 1000.0f64).sqrt();
        assert!((frac - 0.7).abs() <= 3.0 * sd, "fraction {frac}");
        assert_eq!(irr.mask.count_observed(), irr.timestamps[0].len());
    }

    #[test]
    fn assembly_edge_masks() {
        let x = random_set(2, 4, 3, 5);
        let y = random_set(2, 4, 3, 6);
        assert_eq!(assemble_imputation(&x, &Mask::ones(x.dim()), &y).unwrap(), x);
        assert_eq!(assemble_imputation(&x, &Mask::zeros(x.dim()), &y).unwrap(), y);
        let small = random_set(1, 4, 3, 7);
        assert!(assemble_imputation(&x, &Mask::ones(x.dim()), &small).is_err());
    }

    proptest! {
        #[test]
        fn assembly_is_elementwise(seed in any::<u64>(), rate in 0.0f64..1.0) {
            let x = random_set(3, 6, 2, seed);
            let y = random_set(3, 6, 2, seed.wrapping_add(1));
            let (_, m) = simulate_missing(&x, rate, seed).unwrap();
            let out = assemble_imputation(&x, &m, &y).unwrap();
            for (idx, &b) in m.bits().indexed_iter() {
                let expect = if b == 1 { x.values()[idx] } else { y.values()[idx] };
                prop_assert_eq!(out.values()[idx].to_bits(), expect.to_bits());
            }
            prop_assert_eq!(assemble_imputation(&x, &m, &x).unwrap(), x);
        }
    }
}
