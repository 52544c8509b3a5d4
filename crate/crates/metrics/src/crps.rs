//! Continuous ranked probability score of an empirical ensemble.

use ndarray::{Array3, Array4, Axis};

use crate::error::{MetricError, Result};

/// Energy form `(1/S) Σ|x_i − y| − (1/(2S²)) ΣΣ|x_i − x_j|`.
///
/// The pairwise term is evaluated on the sorted ensemble as
/// `(2/S²) Σ_i (2i − S − 1) x_(i)`, which is `O(S log S)`.
pub fn crps_empirical(ensemble: &[f64], y: f64) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(MetricError::Parameter("empty ensemble".into()));
    }
    let s = ensemble.len() as f64;
    let mut sorted = ensemble.to_vec();
    sorted.sort_by(f64::total_cmp);
    let abs_err = sorted.iter().map(|x| (x - y).abs()).sum::<f64>() / s;
    let spread: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - s - 1.0) * x)
        .sum::<f64>()
        * 2.0
        / (s * s);
    Ok((abs_err - 0.5 * spread).max(0.0))
}

/// Mean CRPS over every target entry of `draws [S, N, T, D]` against
/// `target [N, T, D]`. With `select`, only entries flagged 1 are scored.
pub fn crps_ensemble(draws: &Array4<f64>, target: &Array3<f64>, select: Option<&Array3<u8>>) -> Result<f64> {
    let (s, n, t, d) = draws.dim();
    if s == 0 {
        return Err(MetricError::Parameter("empty draw axis".into()));
    }
    if (n, t, d) != target.dim() {
        return Err(MetricError::Sizing(format!(
            "draws {:?} vs target {:?}",
            draws.dim(),
            target.dim()
        )));
    }
    if let Some(m) = select {
        if m.dim() != target.dim() {
            return Err(MetricError::Sizing("selection mask shape mismatch".into()));
        }
    }
    let mut total = 0.0;
    let mut count = 0usize;
    let mut buf = vec![0.0; s];
    for ((i, j, k), &y) in target.indexed_iter() {
        if select.is_some_and(|m| m[[i, j, k]] == 0) {
            continue;
        }
        for (b, v) in buf.iter_mut().zip(draws.index_axis(Axis(1), i).index_axis(Axis(1), j).index_axis(Axis(1), k)) {
            *b = *v;
        }
        total += crps_empirical(&buf, y)?;
        count += 1;
    }
    if count == 0 {
        return Err(MetricError::Parameter("no entries selected for CRPS".into()));
    }
    Ok(total / count as f64)
}


#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_member_is_absolute_error() {
        assert_eq!(crps_empirical(&[2.5], 1.0).unwrap(), 1.5);
    }

    #[test]
    fn two_point_ensemble() {
        assert!((crps_empirical(&[0.0, 1.0], 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((crps_integral(&[0.0, 1.0], 0.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sharp_perfect_forecast_is_zero() {
        assert_eq!(crps_empirical(&[3.0; 7], 3.0).unwrap(), 0.0);
    }

    #[test]
    fn empty_ensemble_is_error() {
        assert!(crps_empirical(&[], 0.0).is_err());
    }

    #[test]
    fn tensor_form_averages_entries() {
        let draws = Array4::from_shape_vec((2, 1, 1, 2), vec![0.0, 5.0, 1.0, 5.0]).unwrap();
        let target = Array3::from_shape_vec((1, 1, 2), vec![0.0, 5.0]).unwrap();
        assert!((crps_ensemble(&draws, &target, None).unwrap() - 0.125).abs() < 1e-15);
        let sel = Array3::from_shape_vec((1, 1, 2), vec![1u8, 0]).unwrap();
        assert!((crps_ensemble(&draws, &target, Some(&sel)).unwrap() - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn energy_form_matches_integral(ens in proptest::collection::vec(-10.0f64..10.0, 1..40), y in -12.0f64..12.0) {
            let got = crps_empirical(&ens, y).unwrap();
            prop_assert!((got - crps_integral(&ens, y)).abs() < 1e-9);
            prop_assert!((got - crps_pairwise(&ens, y)).abs() < 1e-9);
            prop_assert!(got >= 0.0);
        }
    }
}
