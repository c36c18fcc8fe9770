//! Calibration constants for the finite-n verdicts.
//!
//! The convergence statements being checked are asymptotic and carry no
//! rates, so each threshold below is an empirical constant. Every value was
//! fixed from an oracle run that computes the same statistic along an
//! independent route; `tests/calibration.rs` re-runs those oracles and checks
//! each constant still has margin.

/// Median TV between the conjugate-normal predictive at n = 1000 and
/// `N(θ, σ²)`, over 100 seeds. Oracle median ≈ 0.009.
pub const GAUSS_CONJ_TV_N1000: f64 = 0.02;

/// Largest atom gap between the urn predictive at n = 10⁴ and the proxy at
/// horizon 10⁵, a=(1,1). Oracle: martingale fluctuation sd ≈ 0.0047.
pub const POLYA_ATOM_GAP: f64 = 0.02;

/// Final-value threshold for the urn TV curve at n = 10⁴.
pub const POLYA_TV: f64 = 0.02;

/// Kolmogorov distance between the conjugate-normal predictive and the
/// empirical measure at n = 10⁴. Oracle 99th percentile ≈ 0.016.
pub const GAUSS_CONJ_EMPIRICAL_GAP: f64 = 0.05;

/// Largest relative growth of the running maximum over the last half of the
/// checkpoints for an `L^p` curve to count as bounded.
pub const LP_STABILITY: f64 = 0.05;

/// Minimum growth of the c.i.d. predictive `L²` norm from n = 10 to n = 1000
/// for the power-law rule with exponent 2. Oracle ratio ≈ 106.
pub const GAUSS_CID_LP_GROWTH: f64 = 10.0;

/// Upper bound on the box-dimension estimate at cover depth 20.
pub const COVER_DIM_DEPTH20: f64 = 0.25;

/// Fraction of seeds that must show a negative Spearman trend.
pub const MIN_NEGATIVE_TREND_FRACTION: f64 = 0.95;

/// Monte Carlo acceptance band in standard errors.
pub const MC_SIGMAS: f64 = 3.0;

/// Tolerance for statistics computed by exact enumeration.
pub const EXACT_TOL: f64 = 1e-12;
