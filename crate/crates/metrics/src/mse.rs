use ndarray::{ArrayBase, Data, Dimension, Zip};

use crate::error::{MetricError, Result};

/// Mean of squared elementwise differences.
pub fn mse<S1, S2, D>(prediction: &ArrayBase<S1, D>, target: &ArrayBase<S2, D>) -> Result<f64>
where
    S1: Data<Elem = f64>,
    S2: Data<Elem = f64>,
    D: Dimension,
{
    if prediction.shape() != target.shape() {
        return Err(MetricError::Sizing(format!(
            "prediction shape {:?} != target shape {:?}",
            prediction.shape(),
            target.shape()
        )));
    }
    if prediction.is_empty() {
        return Err(MetricError::Parameter("mse of empty arrays".into()));
    }
    let sum = Zip::from(prediction)
        .and(target)
        .fold(0.0, |acc, &p, &t| acc + (p - t) * (p - t));
    Ok(sum / prediction.len() as f64)
}

/// MSE restricted to entries where `select` is 1.
pub fn masked_mse<S1, S2, S3, D>(
    prediction: &ArrayBase<S1, D>,
    target: &ArrayBase<S2, D>,
    select: &ArrayBase<S3, D>,
) -> Result<f64>
where
    S1: Data<Elem = f64>,
    S2: Data<Elem = f64>,
    S3: Data<Elem = u8>,
    D: Dimension,
{
    if prediction.shape() != target.shape() || select.shape() != target.shape() {
        return Err(MetricError::Sizing("masked mse shape mismatch".into()));
    }
    let (sum, count) = Zip::from(prediction)
        .and(target)
        .and(select)
        .fold((0.0, 0usize), |(s, c), &p, &t, &m| {
            if m == 1 {
                (s + (p - t) * (p - t), c + 1)
            } else {
                (s, c)
            }
        });
    if count == 0 {
        return Err(MetricError::Parameter("no selected entries".into()));
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array3, Array4};
    use rand::{Rng, SeedableRng};

    #[test]
    fn identical_is_zero_and_unit_offset_is_one() {
        let a = Array3::from_elem((2, 3, 4), 0.7);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let zeros = Array3::<f64>::zeros((2, 3, 4));
        let ones = Array3::<f64>::ones((2, 3, 4));
        assert_eq!(mse(&zeros, &ones).unwrap(), 1.0);
    }

    #[test]
    fn matches_scalar_loop() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let a = Array4::from_shape_simple_fn((2, 3, 4, 5), || rng.random_range(-2.0f64..2.0));
        let b = Array4::from_shape_simple_fn((2, 3, 4, 5), || rng.random_range(-2.0f64..2.0));
        let (av, bv) = (a.as_slice().unwrap(), b.as_slice().unwrap());
        let mut acc = 0.0f64;
        for i in 0..av.len() {
            acc += (av[i] - bv[i]).powi(2);
        }
        acc /= av.len() as f64;
        assert!((mse(&a, &b).unwrap() - acc).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_error() {
        let a = Array3::<f64>::zeros((2, 3, 4));
        let b = Array3::<f64>::zeros((2, 3, 5));
        assert!(matches!(mse(&a, &b), Err(MetricError::Sizing(_))));
    }

    #[test]
    fn masked_mse_ignores_unselected() {
        let p = Array3::from_shape_vec((1, 1, 3), vec![0.0, 5.0, 1.0]).unwrap();
        let t = Array3::from_shape_vec((1, 1, 3), vec![1.0, 0.0, 1.0]).unwrap();
        let m = Array3::from_shape_vec((1, 1, 3), vec![1u8, 0, 1]).unwrap();
        assert_eq!(masked_mse(&p, &t, &m).unwrap(), 0.5);
    }
}
