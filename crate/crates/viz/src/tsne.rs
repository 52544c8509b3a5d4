//! Exact t-SNE.
//!
//! Bit-identical input rows share one initial position and, because every
//! per-point quantity is computed in an order independent of the point's own
//! index, they stay bit-identical through optimization.

use std::collections::HashMap;

use rand_distr::{Distribution, Normal};
use tsgb_core::rng::seeded;

use crate::error::{Result, VizError};

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub seed: u64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            seed: 0,
            iterations: 1000,
            learning_rate: 200.0,
            exaggeration: 12.0,
            exaggeration_iters: 250,
        }
    }
}

const ENTROPY_TOL: f64 = 1e-5;
const SEARCH_STEPS: usize = 100;
const INIT_SD: f64 = 1e-4;
const MIN_GAIN: f64 = 0.01;

fn squared_distances(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Precision whose conditional distribution over `dists` has the target
/// entropy. `dists` must be sorted so that twins see identical input.
fn find_beta(dists: &[f64], log_perp: f64) -> f64 {
    let mut beta = 1.0;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let d0 = dists[0];
    for _ in 0..SEARCH_STEPS {
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for &d in dists {
            let w = (-(d - d0) * beta).exp();
            sum += w;
            weighted += w * (d - d0);
        }
        let entropy = sum.ln() + beta * weighted / sum;
        let diff = entropy - log_perp;
        if diff.abs() < ENTROPY_TOL {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
        }
    }
    beta
}

fn joint_probabilities(rows: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = rows.len();
    let dist = squared_distances(rows);
    let log_perp = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    let mut sorted = Vec::with_capacity(n - 1);
    for i in 0..n {
        sorted.clear();
        sorted.extend((0..n).filter(|&j| j != i).map(|j| dist[i * n + j]));
        sorted.sort_by(f64::total_cmp);
        let beta = find_beta(&sorted, log_perp);
        let d0 = sorted[0];
        let sum: f64 = sorted.iter().map(|&d| (-(d - d0) * beta).exp()).sum();
        for j in 0..n {
            if j != i {
                cond[i * n + j] = (-(dist[i * n + j] - d0) * beta).exp() / sum;
            }
        }
    }
    let mut p = vec![0.0; n * n];
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / denom).max(1e-12);
            }
        }
    }
    p
}

fn initial_positions(rows: &[Vec<f64>], seed: u64) -> Vec<[f64; 2]> {
    let mut rng = seeded(seed);
    let normal = Normal::new(0.0, INIT_SD).expect("valid sd");
    let mut first: HashMap<Vec<u64>, [f64; 2]> = HashMap::new();
    rows.iter()
        .map(|r| {
            let key: Vec<u64> = r.iter().map(|v| v.to_bits()).collect();
            *first
                .entry(key)
                .or_insert_with(|| [normal.sample(&mut rng), normal.sample(&mut rng)])
        })
        .collect()
}

/// Embed `rows` into two dimensions.
pub fn tsne(rows: &[Vec<f64>], cfg: &TsneConfig) -> Result<Vec<[f64; 2]>> {
    let n = rows.len();
    if !(cfg.perplexity.is_finite() && cfg.perplexity > 0.0) {
        return Err(VizError::Parameter(format!("perplexity {} must be positive", cfg.perplexity)));
    }
    if (n as f64) < 3.0 * cfg.perplexity || n < 2 {
        return Err(VizError::Parameter(format!(
            "t-SNE with perplexity {} needs at least {} points, got {n}",
            cfg.perplexity,
            (3.0 * cfg.perplexity).ceil()
        )));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(VizError::Sizing("rows differ in length".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(VizError::Parameter("non-finite input to t-SNE".into()));
    }

    let p = joint_probabilities(rows, cfg.perplexity);
    let mut y = initial_positions(rows, cfg.seed);
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = vec![0.0; n * n];
    let mut grad = vec![[0.0f64; 2]; n];

    for iter in 0..cfg.iterations {
        let exaggerate = if iter < cfg.exaggeration_iters { cfg.exaggeration } else { 1.0 };
        let momentum = if iter < cfg.exaggeration_iters { 0.5 } else { 0.8 };

        let mut total = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = q;
                num[j * n + i] = q;
                total += 2.0 * q;
            }
        }
        for i in 0..n {
            let mut g = [0.0, 0.0];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let q = num[i * n + j];
                let coef = (exaggerate * p[i * n + j] - q / total) * q;
                g[0] += coef * (y[i][0] - y[j][0]);
                g[1] += coef * (y[i][1] - y[j][1]);
            }
            grad[i] = [4.0 * g[0], 4.0 * g[1]];
        }
        for i in 0..n {
            for k in 0..2 {
                let gk = grad[i][k];
                gains[i][k] = if (gk > 0.0) != (update[i][k] > 0.0) {
                    gains[i][k] + 0.2
                } else {
                    (gains[i][k] * 0.8).max(MIN_GAIN)
                };
                update[i][k] = momentum * update[i][k] - cfg.learning_rate * gains[i][k] * gk;
                y[i][k] += update[i][k];
            }
        }
        let (mx, my) = y.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
        let (mx, my) = (mx / n as f64, my / n as f64);
        for p in y.iter_mut() {
            p[0] -= mx;
            p[1] -= my;
        }
    }
    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(VizError::Parameter("t-SNE diverged".into()));
    }
    Ok(y)
}

/// Largest extent of the embedding along either axis.
pub fn span(points: &[[f64; 2]]) -> f64 {
    (0..2)
        .map(|k| {
            let (lo, hi) = points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])));
            hi - lo
        })
        .fold(0.0, f64::max)
}
