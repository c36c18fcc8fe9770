//! Exchangeable normal model: `θ ~ N(m0, τ0²)`, then `x_i ~ N(θ, σ²)` i.i.d.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::gaussian::DenseGaussian;
use crate::error::{invalid, Result};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussConjParams {
    pub prior_mean: f64,
    pub prior_var: f64,
    pub noise_var: f64,
}

impl Default for GaussConjParams {
    fn default() -> Self {
        Self {
            prior_mean: 0.0,
            prior_var: 1.0,
            noise_var: 1.0,
        }
    }
}

impl GaussConjParams {
    pub fn validate(&self) -> Result<()> {
        if !self.prior_mean.is_finite() {
            return Err(invalid("prior_mean", "must be finite"));
        }
        if !(self.prior_var > 0.0 && self.prior_var.is_finite()) {
            return Err(invalid("prior_var", "must be positive"));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(invalid("noise_var", "must be positive"));
        }
        Ok(())
    }

    /// Posterior mean and variance of `θ` given the history.
    pub fn posterior(&self, history: &[f64]) -> (f64, f64) {
        let n = history.len() as f64;
        let sum: f64 = history.iter().sum();
        let precision = 1.0 / self.prior_var + n / self.noise_var;
        let mean = (self.prior_mean / self.prior_var + sum / self.noise_var) / precision;
        (mean, 1.0 / precision)
    }

    /// Predictive mean and variance `N(m_n, σ² + τ_n²)`.
    pub fn predictive(&self, history: &[f64]) -> (f64, f64) {
        let (m, t) = self.posterior(history);
        (m, self.noise_var + t)
    }

    pub(crate) fn joint(&self, n: usize) -> Result<DenseGaussian> {
        let mean = DVector::from_element(n, self.prior_mean);
        let cov = DMatrix::from_fn(n, n, |i, j| {
            self.prior_var + if i == j { self.noise_var } else { 0.0 }
        });
        DenseGaussian::new(mean, cov)
    }
}

pub(crate) fn sample(params: &GaussConjParams, n: usize, rng: &mut SimRng) -> (f64, Vec<f64>) {
    let prior = Normal::new(params.prior_mean, params.prior_var.sqrt()).expect("validated");
    let theta = prior.sample(rng);
    let noise = Normal::new(0.0, params.noise_var.sqrt()).expect("validated");
    let xs = (0..n).map(|_| theta + noise.sample(rng)).collect();
    (theta, xs)
}

/// One draw from the predictive given sufficient statistics.
pub(crate) fn draw_predictive(params: &GaussConjParams, history: &[f64], rng: &mut SimRng) -> f64 {
    let (m, v) = params.predictive(history);
    m + v.sqrt() * rng.sample::<f64, _>(rand_distr::StandardNormal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_update_single_point() {
        let p = GaussConjParams::default();
        let (m, v) = p.predictive(&[2.0]);
        assert!((m - 1.0).abs() < 1e-15);
        assert!((v - 1.5).abs() < 1e-15);
    }

    #[test]
    fn prior_predictive_for_empty_history() {
        let p = GaussConjParams {
            prior_mean: 0.4,
            prior_var: 2.0,
            noise_var: 0.5,
        };
        assert_eq!(p.predictive(&[]), (0.4, 2.5));
    }

    #[test]
    fn invalid_variances() {
        let mut p = GaussConjParams::default();
        p.noise_var = 0.0;
        assert!(p.validate().is_err());
        p.noise_var = 1.0;
        p.prior_var = -1.0;
        assert!(p.validate().is_err());
    }
}
