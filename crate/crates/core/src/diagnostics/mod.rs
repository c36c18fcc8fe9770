//! Numeric checks of convergence and martingale statements on simulated
//! trajectories.

pub mod pattern;
pub mod thresholds;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measure::{
    kolmogorov_distance, lp_density_norm, tv_breakdown, CompactWindow, DomainKind, GridSpec,
    MixedMeasure1D,
};
use crate::models::{
    self, directing, polya, Directing, ModelParams, ModelSpec, PredictiveLaw, Trajectory, UrnState,
};
use crate::rng::{self, stream};
use crate::series::{mean_stderr, DiagnosticsSeries, Verdict};

pub use pattern::{PatternSearchReport, ScanMode};

/// Log-spaced checkpoint grid.
pub const DEFAULT_CHECKPOINTS: [usize; 9] = [1, 3, 10, 30, 100, 300, 1000, 3000, 10_000];

/// Largest node count for grids built around a window.
pub const MAX_WINDOW_GRID_POINTS: usize = 1 << 22;

fn check_checkpoints(traj: &Trajectory, checkpoints: &[usize]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(invalid("checkpoints", "empty checkpoint list"));
    }
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("checkpoints", "checkpoints must be strictly increasing"));
    }
    let last = *checkpoints.last().expect("nonempty");
    if last > traj.len() {
        return Err(invalid(
            "checkpoints",
            format!("checkpoint {last} exceeds trajectory length {}", traj.len()),
        ));
    }
    Ok(())
}

/// `‖α_n − α‖` at each checkpoint. Passes when the Spearman trend against
/// `n` is negative and the final value is at most `threshold`.
pub fn tv_curve(traj: &Trajectory, checkpoints: &[usize], threshold: f64) -> Result<DiagnosticsSeries> {
    let alpha = directing(traj)?;
    tv_curve_against(traj, &alpha, checkpoints, threshold)
}

pub fn tv_curve_against(
    traj: &Trajectory,
    alpha: &Directing,
    checkpoints: &[usize],
    threshold: f64,
) -> Result<DiagnosticsSeries> {
    check_checkpoints(traj, checkpoints)?;
    let mut series = DiagnosticsSeries::new("tv_curve", threshold);
    for &n in checkpoints {
        let alpha_n = models::predictive(&traj.spec, traj.prefix(n))?;
        let tv = tv_breakdown(&alpha_n, &alpha.measure)?;
        series.push(n as u64, tv.value, 0.0);
    }
    series.verdict = decreasing_below(&series, threshold);
    Ok(series)
}

fn decreasing_below(series: &DiagnosticsSeries, threshold: f64) -> Verdict {
    let trend = series.trend();
    let last = series.last_value().unwrap_or(f64::INFINITY);
    Verdict::from_bool(trend < 0.0 && last <= threshold)
}

/// Gap between `α_n` and `α` on their atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomGap {
    pub value: f64,
    /// Per-atom gaps `|α_n{x} − α{x}|` over the union of atom locations.
    pub gaps: Vec<(f64, f64)>,
    pub note: Option<String>,
}

/// `max_x |α_n{x} − α{x}|` over the atoms of either measure.
pub fn atom_sup_gap(traj: &Trajectory, n: usize) -> Result<AtomGap> {
    let alpha = directing(traj)?;
    atom_sup_gap_against(traj, &alpha, n)
}

pub fn atom_sup_gap_against(traj: &Trajectory, alpha: &Directing, n: usize) -> Result<AtomGap> {
    if n > traj.len() {
        return Err(invalid("n", format!("{n} exceeds trajectory length {}", traj.len())));
    }
    let alpha_n = models::predictive(&traj.spec, traj.prefix(n))?;
    Ok(atom_gap_between(&alpha_n, &alpha.measure))
}

pub fn atom_gap_between(alpha_n: &MixedMeasure1D, alpha: &MixedMeasure1D) -> AtomGap {
    let mut locations: Vec<f64> = alpha_n
        .atoms()
        .iter()
        .chain(alpha.atoms())
        .map(|a| a.location)
        .collect();
    locations.sort_by(f64::total_cmp);
    locations.dedup_by(|a, b| (*a - *b).abs() <= crate::measure::ATOM_MERGE_TOL);
    if locations.is_empty() {
        return AtomGap {
            value: 0.0,
            gaps: Vec::new(),
            note: Some("no atoms in either measure".into()),
        };
    }
    let gaps: Vec<(f64, f64)> = locations
        .iter()
        .map(|&x| (x, (alpha_n.atom_mass_at(x) - alpha.atom_mass_at(x)).abs()))
        .collect();
    let value = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
    AtomGap {
        value,
        gaps,
        note: None,
    }
}

/// Kolmogorov distance between `α_n` and the empirical measure of `x_1..x_n`.
pub fn empirical_gap(traj: &Trajectory, n: usize) -> Result<f64> {
    if traj.spec.params.domain() == DomainKind::FiniteSet {
        return Err(Error::UnorderedDomain);
    }
    if n == 0 || n > traj.len() {
        return Err(invalid("n", format!("{n} outside 1..={}", traj.len())));
    }
    let history = traj.prefix(n);
    let alpha_n = models::predictive(&traj.spec, history)?;
    let mu_n = MixedMeasure1D::empirical(history, DomainKind::RealLine)?;
    kolmogorov_distance(&alpha_n, &mu_n)
}

/// Lay a Gaussian predictive on a grid that covers `window` and resolves the
/// density (step at most `sd / 32`).
pub fn predictive_on_window(law: &PredictiveLaw, window: &CompactWindow) -> Result<MixedMeasure1D> {
    let Some((mean, variance)) = law.gaussian() else {
        return Err(Error::NoDensity);
    };
    let sd = variance.sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegeneratePredictive(variance));
    }
    let lo = window.lo().min(mean - 8.0 * sd);
    let hi = window.hi().max(mean + 8.0 * sd);
    let step = (sd / 32.0).min((hi - lo) / (crate::measure::DEFAULT_GRID_POINTS - 1) as f64);
    // One extra cell on each side keeps the window inside the last node
    // after rounding.
    let spec = GridSpec::covering(lo - step, hi + step, step, MAX_WINDOW_GRID_POINTS)
        .map_err(|_| Error::DegeneratePredictive(variance))?;
    MixedMeasure1D::gaussian_on(mean, variance, spec)
}

/// `∫_K f_n^p` at each checkpoint. Passes (bounded) when the running maximum
/// grows by less than 5% over the last half of the checkpoints.
pub fn lp_curve(
    traj: &Trajectory,
    window: &CompactWindow,
    p: f64,
    checkpoints: &[usize],
) -> Result<DiagnosticsSeries> {
    check_checkpoints(traj, checkpoints)?;
    let mut series = DiagnosticsSeries::new("lp_curve", thresholds::LP_STABILITY);
    for &n in checkpoints {
        let law = models::predictive_law(&traj.spec, traj.prefix(n))?;
        let alpha_n = predictive_on_window(&law, window)?;
        series.push(n as u64, lp_density_norm(&alpha_n, window, p)?, 0.0);
    }
    series.verdict = Verdict::from_bool(running_max_growth(&series.values()) < thresholds::LP_STABILITY);
    Ok(series)
}

/// Relative growth of the running maximum from the start of the last half
/// of `values` to the end.
pub fn running_max_growth(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mut running = Vec::with_capacity(values.len());
    let mut acc = f64::NEG_INFINITY;
    for &v in values {
        acc = acc.max(v);
        running.push(acc);
    }
    let mid = running[values.len() / 2];
    let end = running[values.len() - 1];
    if end == mid {
        0.0
    } else {
        (end - mid) / mid
    }
}

/// Event `B` for the martingale check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Target {
    /// Set of colors (finite-set models).
    Colors { colors: Vec<usize> },
    /// `(-∞, b]`.
    HalfLine { b: f64 },
    WholeLine,
}

impl Target {
    pub fn mass(&self, measure: &MixedMeasure1D) -> f64 {
        match self {
            Self::WholeLine => 1.0,
            Self::HalfLine { b } => measure.cdf(*b),
            Self::Colors { colors } => colors.iter().map(|&c| measure.atom_mass_at(c as f64)).sum(),
        }
    }
}

/// For each target `B`: the average over `X_{n+1} ~ α_n` of `α_{n+1}(B)`,
/// minus `α_n(B)`. The urn is enumerated exactly (stderr 0); the Gaussian
/// models use `trials` Monte Carlo draws. Passes when every residual is
/// within 3 standard errors plus 1e-12.
pub fn martingale_residual(
    spec: &ModelSpec,
    history: &[f64],
    targets: &[Target],
    trials: usize,
    seed: u64,
) -> Result<DiagnosticsSeries> {
    if targets.is_empty() {
        return Err(invalid("targets", "no targets"));
    }
    let mut series = DiagnosticsSeries::new("martingale_residual", thresholds::MC_SIGMAS);
    let mut pass = true;
    match &spec.params {
        ModelParams::Polya(p) => {
            let state = UrnState::from_history(p, history)?;
            for (i, target) in targets.iter().enumerate() {
                let residual = match target {
                    Target::WholeLine => 0.0,
                    Target::Colors { colors } => {
                        if let Some(c) = colors.iter().find(|&&c| c >= p.colors()) {
                            return Err(invalid("targets", format!("color {c} out of range")));
                        }
                        polya::one_step_residual(p, &state, colors)
                    }
                    Target::HalfLine { b } => {
                        let colors: Vec<usize> =
                            (0..p.colors()).filter(|&c| c as f64 <= *b).collect();
                        polya::one_step_residual(p, &state, &colors)
                    }
                };
                pass &= residual.abs() <= thresholds::EXACT_TOL;
                series.push(i as u64 + 1, residual, 0.0);
            }
        }
        ModelParams::Singular(_) => return Err(Error::PredictiveIntractable),
        _ => {
            if trials < 2 {
                return Err(invalid("trials", "need at least 2 Monte Carlo trials"));
            }
            let now = models::predictive(spec, history)?;
            let mut rng = rng::substream(seed, stream::MONTE_CARLO);
            let mut samples = vec![Vec::with_capacity(trials); targets.len()];
            let mut extended = history.to_vec();
            extended.push(0.0);
            for _ in 0..trials {
                let x = models::draw_next(spec, history, &mut rng)?;
                *extended.last_mut().expect("nonempty") = x;
                let next = models::predictive(spec, &extended)?;
                for (target, acc) in targets.iter().zip(samples.iter_mut()) {
                    acc.push(target.mass(&next));
                }
            }
            for (i, (target, values)) in targets.iter().zip(&samples).enumerate() {
                let (mean, se) = if matches!(target, Target::WholeLine) {
                    (1.0, 0.0)
                } else {
                    mean_stderr(values)
                };
                let residual = mean - target.mass(&now);
                // The absolute floor absorbs rounding when the target sits
                // so far in a tail that every draw gives almost the same mass.
                pass &= residual.abs() <= thresholds::MC_SIGMAS * se + thresholds::EXACT_TOL;
                series.push(i as u64 + 1, residual, se);
            }
        }
    }
    series.verdict = Verdict::from_bool(pass);
    Ok(series)
}

/// Monte Carlo TV between two normal laws: `E_{X~P}[(1 − q(X)/p(X))⁺]`.
/// Returns (estimate, stderr).
pub fn gaussian_tv_monte_carlo(
    p: (f64, f64),
    q: (f64, f64),
    trials: usize,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let (mp, vp) = p;
    let (mq, vq) = q;
    let (sp, sq) = (vp.sqrt(), vq.sqrt());
    let log_ratio = |x: f64| {
        let zp = (x - mp) / sp;
        let zq = (x - mq) / sq;
        -0.5 * zq * zq + 0.5 * zp * zp - (sq / sp).ln()
    };
    let values: Vec<f64> = (0..trials)
        .map(|_| {
            let x = mp + sp * rng.sample::<f64, _>(rand_distr::StandardNormal);
            (1.0 - log_ratio(x).exp()).max(0.0)
        })
        .collect();
    mean_stderr(&values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoobReport {
    pub p: f64,
    /// `(p/(p−1))^p`.
    pub constant: f64,
    pub n_max: usize,
    pub trials: usize,
    /// Estimate of `E sup_{n≤n_max} ‖Z_n‖^p`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `constant · max_n E‖Z_n‖^p`.
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub argmax_n: usize,
    /// `(E‖Z_n‖^p, stderr)` for n = 1..=n_max.
    pub moments: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

impl DoobReport {
    /// `E‖Z_n‖^p` against `n`.
    pub fn moment_series(&self) -> DiagnosticsSeries {
        let mut series = DiagnosticsSeries::new("doob_check", self.constant);
        for (i, &(m, se)) in self.moments.iter().enumerate() {
            series.push(i as u64 + 1, m, se);
        }
        series.verdict = self.verdict;
        series
    }
}

pub fn doob_constant(p: f64) -> f64 {
    (p / (p - 1.0)).powf(p)
}

/// Doob's maximal inequality for `Z_n = f_n` restricted to `window` with the
/// `L^p` norm, over `trials` independent trajectories of length `n_max`.
/// Passes when `lhs ≤ rhs + 3·sqrt(se_lhs² + se_rhs²)`.
pub fn doob_check(
    spec: &ModelSpec,
    window: &CompactWindow,
    p: f64,
    n_max: usize,
    trials: usize,
    seed: u64,
) -> Result<DoobReport> {
    if !(p > 1.0) {
        return Err(invalid("p", format!("Doob's inequality needs p > 1, got {p}")));
    }
    if n_max == 0 || trials < 2 {
        return Err(invalid("trials", "need n_max >= 1 and at least 2 trials"));
    }
    if !matches!(spec.params, ModelParams::GaussConj(_) | ModelParams::GaussCid(_)) {
        return Err(Error::NoDensity);
    }
    let paths: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let run = spec.with_seed(rng::replicate_seed(seed, t));
            let traj = models::sample_trajectory(&run, n_max)?;
            (1..=n_max)
                .map(|n| {
                    let law = models::predictive_law(&run, traj.prefix(n))?;
                    lp_density_norm(&predictive_on_window(&law, window)?, window, p)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let sups: Vec<f64> = paths.iter().map(|v| v.iter().copied().fold(0.0, f64::max)).collect();
    let (lhs, lhs_stderr) = mean_stderr(&sups);
    let mut best = (0, f64::NEG_INFINITY, 0.0);
    let mut moments = Vec::with_capacity(n_max);
    for n in 0..n_max {
        let column: Vec<f64> = paths.iter().map(|v| v[n]).collect();
        let (m, se) = mean_stderr(&column);
        moments.push((m, se));
        if m > best.1 {
            best = (n + 1, m, se);
        }
    }
    let constant = doob_constant(p);
    let rhs = constant * best.1;
    let rhs_stderr = constant * best.2;
    let combined = (lhs_stderr * lhs_stderr + rhs_stderr * rhs_stderr).sqrt();
    Ok(DoobReport {
        p,
        constant,
        n_max,
        trials,
        lhs,
        lhs_stderr,
        rhs,
        rhs_stderr,
        argmax_n: best.0,
        moments,
        verdict: Verdict::from_bool(lhs <= rhs + thresholds::MC_SIGMAS * combined),
    })
}

/// Identity-block search for a singular model spec.
pub fn identity_pattern_search(
    spec: &ModelSpec,
    n: usize,
    trials: usize,
    mode: ScanMode,
) -> Result<PatternSearchReport> {
    if !matches!(spec.params, ModelParams::Singular(_)) {
        return Err(invalid("model", "identity pattern search applies to the singular model"));
    }
    pattern::identity_pattern_search(spec.seed, n, trials, mode, pattern::DEFAULT_ROW_CAP)
}
