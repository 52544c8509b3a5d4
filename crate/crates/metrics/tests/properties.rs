//! Metric properties checked through the public API.

use ndarray::{Array3, Array4};
use proptest::prelude::*;
use tsgb_core::SeriesSet;
use tsgb_metrics::*;

fn set(n: usize, t: usize, d: usize, values: Vec<f64>) -> SeriesSet {
    SeriesSet::from_vec(n, t, d, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w1_is_a_metric_on_samples(
        a in prop::collection::vec(-5.0f64..5.0, 1..30),
        b in prop::collection::vec(-5.0f64..5.0, 1..30),
        c in prop::collection::vec(-5.0f64..5.0, 1..30),
    ) {
        let ab = wasserstein_1d(&a, &b).unwrap();
        prop_assert!((ab - wasserstein_1d(&b, &a).unwrap()).abs() < 1e-12);
        let ac = wasserstein_1d(&a, &c).unwrap();
        let cb = wasserstein_1d(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-9);
        prop_assert_eq!(wasserstein_1d(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn w1_of_a_shift_is_the_shift(a in prop::collection::vec(-5.0f64..5.0, 1..30), shift in -3.0f64..3.0) {
        let b: Vec<f64> = a.iter().map(|v| v + shift).collect();
        prop_assert!((wasserstein_1d(&a, &b).unwrap() - shift.abs()).abs() < 1e-9);
    }

    #[test]
    fn single_draw_crps_is_absolute_error(x in prop::collection::vec(-4.0f64..4.0, 12), y in prop::collection::vec(-4.0f64..4.0, 12)) {
        let draws = Array4::from_shape_vec((1, 2, 3, 2), x.clone()).unwrap();
        let target = Array3::from_shape_vec((2, 3, 2), y.clone()).unwrap();
        let mae = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum::<f64>() / 12.0;
        prop_assert!((crps_ensemble(&draws, &target, None).unwrap() - mae).abs() < 1e-12);
    }

    #[test]
    fn crps_is_nonnegative_and_bounded_by_mean_error(ens in prop::collection::vec(-4.0f64..4.0, 1..20), y in -4.0f64..4.0) {
        let c = crps_empirical(&ens, y).unwrap();
        let mae = ens.iter().map(|v| (v - y).abs()).sum::<f64>() / ens.len() as f64;
        prop_assert!(c >= 0.0);
        prop_assert!(c <= mae + 1e-12);
    }

    #[test]
    fn ensemble_quantiles_are_nested(values in prop::collection::vec(-3.0f64..3.0, 8 * 4)) {
        let draws = Array4::from_shape_vec((8, 1, 4, 1), values).unwrap();
        let stats = ensemble_stats(&draws, &[0.1, 0.5, 0.9]).unwrap();
        let (lo, mid, hi) = (stats.quantile(0.1).unwrap(), stats.quantile(0.5).unwrap(), stats.quantile(0.9).unwrap());
        for i in 0..4 {
            prop_assert!(lo[[0, i, 0]] <= mid[[0, i, 0]] && mid[[0, i, 0]] <= hi[[0, i, 0]]);
        }
    }
}

#[test]
fn sliced_wasserstein_separates_shifted_sets() {
    let a: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
    let b: Vec<f64> = a.iter().map(|v| v + 1.0).collect();
    let (sa, sb) = (set(10, 3, 2, a), set(10, 3, 2, b));
    assert_eq!(sliced_wasserstein(&sa, &sa, 32, 0).unwrap(), 0.0);
    let d = sliced_wasserstein(&sa, &sb, 32, 0).unwrap();
    assert!(d > 0.1, "{d}");
    assert_eq!(d, sliced_wasserstein(&sa, &sb, 32, 0).unwrap());
    assert!((marginal_wasserstein(&sa, &sb).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn masked_mse_equals_mse_on_a_full_mask() {
    let p = Array3::from_shape_fn((2, 4, 3), |(i, t, d)| (i + t * d) as f64 * 0.1);
    let y = Array3::from_shape_fn((2, 4, 3), |(i, t, d)| (i * t + d) as f64 * 0.2);
    let all = Array3::<u8>::ones((2, 4, 3));
    assert_eq!(masked_mse(&p, &y, &all).unwrap(), mse(&p, &y).unwrap());
}

#[test]
fn reports_round_trip_through_json() {
    let mut r = MetricReport::default();
    r.insert(MetricKind::DiscriminativeScore, 0.1234567890123456);
    r.insert(MetricKind::ContextFid, 3.0e-7);
    let r = r.with_metadata("note", serde_json::json!("x"));
    let back: MetricReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
    assert!(r.out_of_range().is_empty());
}
