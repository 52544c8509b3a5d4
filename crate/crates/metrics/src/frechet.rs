//! Fréchet distance between Gaussian moment fits.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{MetricError, Result};

/// Sample mean and unbiased covariance of `rows` (each row one observation).
pub fn gaussian_moments(rows: &[Vec<f64>]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = rows.len();
    if n < 2 {
        return Err(MetricError::InsufficientData(format!(
            "{n} rows; covariance needs at least 2"
        )));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(MetricError::Sizing("ragged embedding rows".into()));
    }
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let mean = x.row_mean().transpose();
    let mut centered = x;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    Ok((mean, cov))
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetric PSD square root; negative eigenvalues are clamped to 0.
fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// `‖μ₁−μ₂‖² + tr(Σ₁ + Σ₂ − 2(Σ₁Σ₂)^{1/2})`.
///
/// The trace of `(Σ₁Σ₂)^{1/2}` is the nuclear norm of `Σ₂^{1/2} Σ₁^{1/2}`,
/// read off its singular values so that no eigenvalue is squared.
pub fn frechet_distance(
    mu1: &DVector<f64>,
    sigma1: &DMatrix<f64>,
    mu2: &DVector<f64>,
    sigma2: &DMatrix<f64>,
) -> Result<f64> {
    let d = mu1.len();
    if mu2.len() != d || sigma1.shape() != (d, d) || sigma2.shape() != (d, d) {
        return Err(MetricError::Sizing(format!(
            "moment dimensions disagree: mu {d}/{}, sigma {:?}/{:?}",
            mu2.len(),
            sigma1.shape(),
            sigma2.shape()
        )));
    }
    let s1 = clamp_psd(sigma1);
    let s2 = clamp_psd(sigma2);
    let tr_sqrt: f64 = (sqrt_psd(&s2) * sqrt_psd(&s1)).singular_values().sum();
    let diff = mu1 - mu2;
    let value = diff.dot(&diff) + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
    Ok(value.max(0.0))
}

fn clamp_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let vals = eig.eigenvalues.map(|v| v.max(0.0));
    symmetrize(&(&eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn closed_form_cases() {
        let mu = DVector::from_vec(vec![0.3, -1.0]);
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert!(frechet_distance(&mu, &s, &mu, &s).unwrap() < 1e-9);

        let one = DMatrix::from_element(1, 1, 1.0);
        let d = frechet_distance(
            &DVector::from_element(1, 0.0),
            &one,
            &DVector::from_element(1, 1.0),
            &one,
        )
        .unwrap();
        assert!((d - 1.0).abs() < 1e-9);

        let z = DVector::zeros(2);
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        assert!((frechet_distance(&z, &a, &z, &b).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_in_arguments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let rows = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..40).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
        };
        let (m1, s1) = gaussian_moments(&rows(&mut rng)).unwrap();
        let (m2, s2) = gaussian_moments(&rows(&mut rng)).unwrap();
        let ab = frechet_distance(&m1, &s1, &m2, &s2).unwrap();
        let ba = frechet_distance(&m2, &s2, &m1, &s1).unwrap();
        assert!((ab - ba).abs() < 1e-9);
        assert!(ab > 0.0);
    }

    #[test]
    fn rank_deficient_identical_moments_vanish() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..70)
            .map(|_| {
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                (0..64).map(|j| v[j % 3] * (1.0 + j as f64 / 64.0)).collect()
            })
            .collect();
        let (m, s) = gaussian_moments(&rows).unwrap();
        assert!(frechet_distance(&m, &s, &m, &s).unwrap() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let err = frechet_distance(
            &DVector::zeros(2),
            &DMatrix::identity(2, 2),
            &DVector::zeros(3),
            &DMatrix::identity(3, 3),
        );
        assert!(matches!(err, Err(MetricError::Sizing(_))));
    }

    #[test]
    fn moments_of_known_rows() {
        let rows = vec![vec![0.0, 1.0], vec![2.0, 3.0]];
        let (m, c) = gaussian_moments(&rows).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 2.0]);
        assert_eq!(c[(0, 0)], 2.0);
        assert_eq!(c[(0, 1)], 2.0);
    }
}
