//! Dense multivariate normal densities through a Cholesky factor.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub(crate) struct DenseGaussian {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
}

impl DenseGaussian {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let chol = covariance
            .cholesky()
            .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
        Ok(Self {
            mean,
            chol: chol.l(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Whitened residuals `L^{-1}(x - mean)` for the leading `x.len()` coordinates.
    fn whiten(&self, x: &[f64]) -> Vec<f64> {
        let k = x.len();
        let mut z = vec![0.0; k];
        for i in 0..k {
            let mut r = x[i] - self.mean[i];
            for j in 0..i {
                r -= self.chol[(i, j)] * z[j];
            }
            z[i] = r / self.chol[(i, i)];
        }
        z
    }

    /// Log density of the marginal law of the leading `x.len()` coordinates.
    /// The leading block of a Cholesky factor factors the leading block of
    /// the covariance, so any prefix can be evaluated from one factorization.
    pub fn log_density_prefix(&self, x: &[f64]) -> f64 {
        let k = x.len();
        debug_assert!(k <= self.dim());
        let z = self.whiten(x);
        let quad: f64 = z.iter().map(|v| v * v).sum();
        let log_det: f64 = (0..k).map(|i| self.chol[(i, i)].ln()).sum();
        -0.5 * quad - log_det - 0.5 * k as f64 * LN_2PI
    }

    /// Log density of the full vector.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim());
        self.log_density_prefix(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_matches_closed_form() {
        let g = DenseGaussian::new(DVector::from_vec(vec![1.0]), DMatrix::from_element(1, 1, 4.0))
            .unwrap();
        let x = 2.5;
        let expected = -0.5 * ((x - 1.0f64) / 2.0).powi(2) - 2.0f64.ln() - 0.5 * LN_2PI;
        assert!((g.log_density(&[x]) - expected).abs() < 1e-14);
    }

    #[test]
    fn singular_covariance_rejected() {
        let cov = DMatrix::from_element(2, 2, 1.0);
        assert!(DenseGaussian::new(DVector::zeros(2), cov).is_err());
    }
}
