//! Conditionally identically distributed (not exchangeable) normal sequence:
//! `X_n = Z_1 + ... + Z_n + U_n` with independent `Z_i ~ N(0, b_i − b_{i−1})`
//! and `U_n ~ N(0, 1 − b_n)` for an increasing `b_n ↑ 1` with summable tails.
//!
//! The sequence is a random walk `S_n = Σ Z_i` observed with shrinking noise,
//! so predictives are computed by sequential Gaussian conditioning (a scalar
//! Kalman filter). The dense covariance `b_{min(i,j)} + (1 − b_i)·1{i=j}` is
//! used for joint densities and for cross-checks.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::gaussian::DenseGaussian;
use crate::error::{invalid, Error, Result};
use crate::rng::SimRng;

/// Rule generating `b_n`, stored through the tail `t_n = 1 − b_n` so that
/// increments stay accurate when `b_n` rounds to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BRule {
    /// `1 − b_n = r^n`, `0 < r < 1`; `Σ(1 − b_n) = r / (1 − r)`.
    Geometric,
    /// `1 − b_n = (n + 1)^{−q}`, `q > 1`; `Σ(1 − b_n) = ζ(q) − 1`.
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussCidParams {
    pub rule: BRule,
    /// Ratio `r` for the geometric rule, exponent `q` for the power rule.
    pub rate: f64,
}

impl Default for GaussCidParams {
    /// `b_n = 1 − 2^{−n}`.
    fn default() -> Self {
        Self {
            rule: BRule::Geometric,
            rate: 0.5,
        }
    }
}

impl GaussCidParams {
    pub fn power(exponent: f64) -> Self {
        Self {
            rule: BRule::Power,
            rate: exponent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.rule {
            BRule::Geometric if !(self.rate > 0.0 && self.rate < 1.0) => {
                Err(invalid("rate", format!("geometric ratio {} must lie in (0, 1)", self.rate)))
            }
            BRule::Power if !(self.rate > 1.0 && self.rate.is_finite()) => Err(invalid(
                "rate",
                format!("power exponent {} must exceed 1 for summable tails", self.rate),
            )),
            _ => Ok(()),
        }
    }

    /// `1 − b_n`; equals 1 at `n = 0`.
    pub fn tail(&self, n: usize) -> f64 {
        match self.rule {
            BRule::Geometric => self.rate.powi(n as i32),
            BRule::Power => ((n + 1) as f64).powf(-self.rate),
        }
    }

    pub fn b(&self, n: usize) -> f64 {
        1.0 - self.tail(n)
    }

    /// `b_n − b_{n−1}`, the variance of `Z_n`.
    pub fn increment(&self, n: usize) -> f64 {
        assert!(n >= 1);
        match self.rule {
            BRule::Geometric => self.rate.powi(n as i32 - 1) * (1.0 - self.rate),
            BRule::Power => self.tail(n - 1) - self.tail(n),
        }
    }

    /// Closed-form `Σ_{n≥1} (1 − b_n)` for the geometric rule; a certified
    /// upper bound `1/(q−1)` (integral test) for the power rule.
    pub fn tail_sum_bound(&self) -> f64 {
        match self.rule {
            BRule::Geometric => self.rate / (1.0 - self.rate),
            BRule::Power => 1.0 / (self.rate - 1.0),
        }
    }

    pub fn covariance(&self, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| {
            let (i, j) = (i + 1, j + 1);
            self.b(i.min(j)) + if i == j { self.tail(i) } else { 0.0 }
        })
    }

    pub(crate) fn joint(&self, n: usize) -> Result<DenseGaussian> {
        DenseGaussian::new(DVector::zeros(n), self.covariance(n))
    }

    /// Mean and variance of `X_{n+1}` given `x_1..x_n`.
    pub fn predictive(&self, history: &[f64]) -> (f64, f64) {
        let filter = self.filter(history);
        let n = history.len();
        (filter.mean, filter.var + self.tail(n))
    }

    /// Posterior of the walk `S_n` given `x_1..x_n`.
    pub fn filter(&self, history: &[f64]) -> WalkPosterior {
        let mut post = WalkPosterior { mean: 0.0, var: 0.0 };
        for (k, &x) in history.iter().enumerate() {
            post = post.update(self, k + 1, x);
        }
        post
    }

    /// Conditional law of `X_{n+1}` by solving the dense `n × n` system.
    pub fn predictive_dense(&self, history: &[f64]) -> Result<(f64, f64)> {
        let n = history.len();
        if n == 0 {
            return Ok((0.0, 1.0));
        }
        let cov = self.covariance(n);
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
        let cross = DVector::from_fn(n, |i, _| self.b(i + 1));
        let x = DVector::from_column_slice(history);
        let weights = chol.solve(&cross);
        let mean = weights.dot(&x);
        let var = 1.0 - weights.dot(&cross);
        Ok((mean, var))
    }
}

/// Gaussian posterior `S_n | x_1..x_n ~ N(mean, var)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkPosterior {
    pub mean: f64,
    pub var: f64,
}

impl WalkPosterior {
    /// Fold in observation `x_k = S_k + U_k`.
    pub fn update(self, params: &GaussCidParams, k: usize, x: f64) -> Self {
        let prior_var = self.var + params.increment(k);
        let noise = params.tail(k);
        let denom = prior_var + noise;
        if denom == 0.0 {
            return Self { mean: x, var: 0.0 };
        }
        let gain = prior_var / denom;
        Self {
            mean: self.mean + gain * (x - self.mean),
            var: prior_var * noise / denom,
        }
    }
}

/// Draws `(Z_1..Z_n, X_1..X_n)`.
pub(crate) fn sample(params: &GaussCidParams, n: usize, rng: &mut SimRng) -> (Vec<f64>, Vec<f64>) {
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut z = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut walk = 0.0;
    for i in 1..=n {
        let zi = params.increment(i).sqrt() * std.sample(rng);
        let ui = params.tail(i).sqrt() * std.sample(rng);
        walk += zi;
        z.push(zi);
        x.push(walk + ui);
    }
    (z, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_defaults() {
        let p = GaussCidParams::default();
        assert_eq!(p.b(0), 0.0);
        assert_eq!(p.b(1), 0.5);
        assert_eq!(p.b(2), 0.75);
        assert_eq!(p.increment(3), 0.125);
        assert_eq!(p.tail_sum_bound(), 1.0);
    }

    #[test]
    fn b_strictly_increasing_below_one() {
        for p in [GaussCidParams::default(), GaussCidParams::power(2.0)] {
            for n in 1..50 {
                assert!(p.b(n) > p.b(n - 1));
                assert!(p.b(n) < 1.0);
                assert!(p.increment(n) > 0.0);
            }
        }
    }

    #[test]
    fn single_observation_predictive() {
        let p = GaussCidParams::default();
        let (m, v) = p.predictive(&[1.3]);
        assert!((m - 0.65).abs() < 1e-15);
        assert!((v - 0.75).abs() < 1e-15);
    }

    #[test]
    fn empty_history_is_prior() {
        let p = GaussCidParams::power(2.0);
        assert_eq!(p.predictive(&[]), (0.0, 1.0));
    }

    #[test]
    fn sequential_matches_dense_solve() {
        let p = GaussCidParams::power(2.0);
        let h = [0.3, -0.2, 0.5, 0.41, 0.38, 0.44, 0.47];
        let (m1, v1) = p.predictive(&h);
        let (m2, v2) = p.predictive_dense(&h).unwrap();
        assert!((m1 - m2).abs() < 1e-10, "{m1} vs {m2}");
        assert!((v1 - v2).abs() < 1e-10, "{v1} vs {v2}");
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(GaussCidParams { rule: BRule::Geometric, rate: 1.0 }.validate().is_err());
        assert!(GaussCidParams { rule: BRule::Power, rate: 1.0 }.validate().is_err());
    }
}
