use candle_core::Tensor;

use crate::config::ScheduleKind;
use crate::error::{ModelError, Result};
use crate::util::row_coefficients;

/// `β_t` for `t = 1..=n` with `α_t = 1 − β_t` and `ᾱ_t = Π_{s≤t} α_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    kind: ScheduleKind,
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(kind: ScheduleKind, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(ModelError::config("schedule needs at least one step"));
        }
        let betas: Vec<f64> = match kind {
            ScheduleKind::Linear { beta_start, beta_end } => {
                if !(0.0 < beta_start && beta_start <= beta_end && beta_end < 1.0) {
                    return Err(ModelError::config(format!(
                        "linear schedule needs 0 < beta_start <= beta_end < 1, got {beta_start}..{beta_end}"
                    )));
                }
                if n_steps == 1 {
                    vec![beta_start]
                } else {
                    let step = (beta_end - beta_start) / (n_steps - 1) as f64;
                    (0..n_steps).map(|i| beta_start + step * i as f64).collect()
                }
            }
            ScheduleKind::Cosine { offset } => {
                if !(offset > 0.0 && offset.is_finite()) {
                    return Err(ModelError::config("cosine offset must be positive"));
                }
                let f = |t: f64| {
                    let v = ((t / n_steps as f64 + offset) / (1.0 + offset) * std::f64::consts::FRAC_PI_2).cos();
                    v * v
                };
                (1..=n_steps)
                    .map(|t| (1.0 - f(t as f64) / f(t as f64 - 1.0)).clamp(1e-8, 0.999))
                    .collect()
            }
        };
        let mut alpha_bars = Vec::with_capacity(n_steps);
        let mut acc = 1.0;
        for b in &betas {
            acc *= 1.0 - b;
            alpha_bars.push(acc);
        }
        Ok(Self {
            kind,
            betas,
            alpha_bars,
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn n_steps(&self) -> usize {
        self.betas.len()
    }

    pub fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.n_steps() {
            return Err(ModelError::config(format!(
                "diffusion step {t} outside 1..={}",
                self.n_steps()
            )));
        }
        Ok(())
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        1.0 - self.betas[t - 1]
    }

    /// `ᾱ_t`, with `ᾱ_0 = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    /// Variance `β̃_t` of `q(x_{t−1} | x_t, x_0)`.
    pub fn posterior_variance(&self, t: usize) -> f64 {
        self.beta(t) * (1.0 - self.alpha_bar(t - 1)) / (1.0 - self.alpha_bar(t))
    }

    /// Coefficients `(c₀, c_t)` of the posterior mean `c₀·x₀ + c_t·x_t`.
    pub fn posterior_coefficients(&self, t: usize) -> (f64, f64) {
        let ab = self.alpha_bar(t);
        let ab_prev = self.alpha_bar(t - 1);
        (
            ab_prev.sqrt() * self.beta(t) / (1.0 - ab),
            self.alpha(t).sqrt() * (1.0 - ab_prev) / (1.0 - ab),
        )
    }

    fn coefficients(&self, steps: &[usize], like: &Tensor) -> Result<(Tensor, Tensor)> {
        for &t in steps {
            self.check_step(t)?;
        }
        let a: Vec<f64> = steps.iter().map(|&t| self.alpha_bar(t).sqrt()).collect();
        let s: Vec<f64> = steps.iter().map(|&t| (1.0 - self.alpha_bar(t)).sqrt()).collect();
        Ok((
            row_coefficients(&a, like.dtype(), like.device())?,
            row_coefficients(&s, like.dtype(), like.device())?,
        ))
    }

    /// `x_t = √ᾱ_t·x₀ + √(1−ᾱ_t)·ε` with one step per row of `[B, T, D]` inputs.
    pub fn diffuse(&self, x0: &Tensor, steps: &[usize], eps: &Tensor) -> Result<Tensor> {
        let (a, s) = self.coefficients(steps, x0)?;
        Ok((x0.broadcast_mul(&a)? + eps.broadcast_mul(&s)?)?)
    }

    /// `x₀ = (x_t − √(1−ᾱ_t)·ε)/√ᾱ_t`.
    pub fn eps_to_x0(&self, x_t: &Tensor, eps: &Tensor, steps: &[usize]) -> Result<Tensor> {
        let (a, s) = self.coefficients(steps, x_t)?;
        Ok((x_t - eps.broadcast_mul(&s)?)?.broadcast_div(&a)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::Device;

    fn linear() -> NoiseSchedule {
        NoiseSchedule::new(ScheduleKind::default(), 1000).unwrap()
    }

    #[test]
    fn linear_defaults_satisfy_invariants() {
        let s = linear();
        assert!(s.alpha_bar(1) > 0.99);
        assert!(s.alpha_bar(1000) < 0.01);
        for t in 1..=1000 {
            assert!(s.beta(t) > 0.0 && s.beta(t) < 1.0);
            assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
        }
    }

    #[test]
    fn cosine_is_monotone() {
        let s = NoiseSchedule::new(ScheduleKind::Cosine { offset: 0.008 }, 200).unwrap();
        for t in 1..=200 {
            assert!(s.beta(t) > 0.0 && s.beta(t) < 1.0);
            assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
        }
        assert!(s.alpha_bar(1) > 0.99);
    }

    #[test]
    fn diffuse_validates_steps_and_inverts() {
        let s = linear();
        let dev = Device::Cpu;
        let x0 = Tensor::new(&[[[1.0f64, -2.0]], [[0.5, 3.0]]], &dev).unwrap();
        let eps = Tensor::new(&[[[0.3f64, 0.1]], [[-1.0, 2.0]]], &dev).unwrap();
        assert!(s.diffuse(&x0, &[0, 5], &eps).is_err());
        assert!(s.diffuse(&x0, &[1, 1001], &eps).is_err());
        let xt = s.diffuse(&x0, &[10, 700], &eps).unwrap();
        let back = s.eps_to_x0(&xt, &eps, &[10, 700]).unwrap();
        let diff = (back - &x0).unwrap().abs().unwrap().max_all().unwrap().to_scalar::<f64>().unwrap();
        assert!(diff < 1e-12);
    }

    #[test]
    fn posterior_at_first_step_returns_x0() {
        let s = linear();
        let (c0, ct) = s.posterior_coefficients(1);
        assert!((c0 - 1.0).abs() < 1e-12 && ct.abs() < 1e-12);
        assert_eq!(s.posterior_variance(1), 0.0);
    }
}
