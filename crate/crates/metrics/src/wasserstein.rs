//! Order-1 Wasserstein distances between empirical distributions.

use ndarray::Axis;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use tsgb_core::rng::Rng;
use tsgb_core::SeriesSet;

use crate::error::{MetricError, Result};

/// W1 between two empirical distributions on the line.
///
/// Equal sizes use the sorted-sample coupling; otherwise the quantile
/// functions are integrated exactly over the merged breakpoints `i/n ∪ j/m`.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::Parameter("wasserstein of an empty sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(sorted_w1(&a, &b))
}

fn sorted_w1(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n == m {
        return a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64;
    }
    // Walk both quantile staircases; each step has constant quantiles.
    let (nf, mf) = (n as f64, m as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut u = 0.0;
    let mut total = 0.0;
    while i < n && j < m {
        let next_a = (i + 1) as f64 / nf;
        let next_b = (j + 1) as f64 / mf;
        let next = next_a.min(next_b);
        total += (next - u) * (a[i] - b[j]).abs();
        u = next;
        // advance whichever staircase steps here; compare in integers to avoid drift
        let step_a = (i + 1) * m <= (j + 1) * n;
        let step_b = (j + 1) * n <= (i + 1) * m;
        if step_a {
            i += 1;
        }
        if step_b {
            j += 1;
        }
    }
    total
}

/// Mean W1 over every per-timestep, per-feature marginal of two sets.
pub fn marginal_wasserstein(a: &SeriesSet, b: &SeriesSet) -> Result<f64> {
    let (_, t, d) = a.dim();
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::Parameter("empty set".into()));
    }
    if b.len_t() != t || b.n_features() != d {
        return Err(MetricError::Sizing(format!(
            "geometry {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let mut total = 0.0;
    for step in 0..t {
        for f in 0..d {
            let col = |s: &SeriesSet| -> Vec<f64> {
                s.values()
                    .index_axis(Axis(1), step)
                    .index_axis(Axis(1), f)
                    .to_vec()
            };
            total += wasserstein_1d(&col(a), &col(b))?;
        }
    }
    Ok(total / (t * d) as f64)
}

/// Random unit directions in `dim` dimensions.
pub fn unit_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

/// Average W1 of flattened samples projected onto `n_projections` seeded unit vectors.
pub fn sliced_wasserstein(a: &SeriesSet, b: &SeriesSet, n_projections: usize, seed: u64) -> Result<f64> {
    Ok(sliced_wasserstein_per_projection(a, b, n_projections, seed)?
        .iter()
        .sum::<f64>()
        / n_projections as f64)
}

pub fn sliced_wasserstein_per_projection(
    a: &SeriesSet,
    b: &SeriesSet,
    n_projections: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_projections == 0 {
        return Err(MetricError::Parameter("n_projections must be >= 1".into()));
    }
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::Parameter("empty set".into()));
    }
    if a.len_t() != b.len_t() || a.n_features() != b.n_features() {
        return Err(MetricError::Sizing("geometry mismatch".into()));
    }
    let dim = a.len_t() * a.n_features();
    let rows_a = a.flat_rows();
    let rows_b = b.flat_rows();
    let project = |rows: &[Vec<f64>], theta: &[f64]| -> Vec<f64> {
        rows.iter()
            .map(|r| r.iter().zip(theta).map(|(x, t)| x * t).sum())
            .collect()
    };
    unit_directions(dim, n_projections, seed)
        .iter()
        .map(|theta| wasserstein_1d(&project(&rows_a, theta), &project(&rows_b, theta)))
        .collect()
}
