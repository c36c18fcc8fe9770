//! Execution of an experiment: every (replicate × diagnostic) cell, the
//! per-diagnostic verdict files and the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use cidlab_core::diagnostics::{self, pattern, Target};
use cidlab_core::fractal;
use cidlab_core::measure::CompactWindow;
use cidlab_core::models::{
    self, Directing, DirectingOptions, Latent, ModelParams, ModelTag, SingularParams, Trajectory,
};
use cidlab_core::series::{format_real, median, DiagnosticsSeries};
use cidlab_core::Verdict;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Diagnostic, DiagnosticConfig, ExperimentConfig};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// Outcome of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    /// Replicate index; absent for once-per-experiment diagnostics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicate: Option<usize>,
    pub seed: u64,
    pub verdict: Verdict,
    pub final_value: Option<f64>,
    pub trend: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

/// Contents of `<label>.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub experiment: String,
    pub model: ModelTag,
    pub label: String,
    pub name: String,
    pub verdict: Verdict,
    pub expected_verdict: Verdict,
    pub matches_expected: bool,
    pub threshold_used: f64,
    pub seed: u64,
    /// Aggregate statistic: the median final value over replicates.
    pub value: Option<f64>,
    /// Median Spearman trend over replicates.
    pub trend: Option<f64>,
    pub rule: String,
    pub cells: Vec<CellSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub diagnostic: String,
    pub replicate: Option<usize>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub label: String,
    pub name: String,
    pub verdict: Verdict,
    pub expected_verdict: Verdict,
    pub matches_expected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub model: ModelTag,
    pub config_hash: String,
    pub tool_version: String,
    pub rng_algorithm: String,
    pub master_seed: u64,
    pub replicate_seeds: Vec<u64>,
    /// Data files relative to the manifest's directory.
    pub files: Vec<String>,
    pub wall_clock_seconds: f64,
    pub errors: Vec<CellError>,
    pub verdicts: Vec<VerdictSummary>,
    pub all_matched: bool,
}

impl RunManifest {
    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn write_file(root: &Path, rel: &str, contents: &str) -> Result<(), RunError> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| RunError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(&path, contents).map_err(|source| RunError::Io { path, source })
}

/// Run `f` on a pool of `jobs` workers (all cores when `None`).
pub fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| RunError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

/// A cell's result before it is written out.
struct Cell {
    summary: CellSummary,
    csv: Option<String>,
}

impl Cell {
    fn from_series(seed: u64, replicate: Option<usize>, series: &DiagnosticsSeries) -> Self {
        Self {
            summary: CellSummary {
                replicate,
                seed,
                verdict: series.verdict,
                final_value: series.last_value().and_then(finite),
                trend: finite(series.trend()),
                error: None,
                details: None,
            },
            csv: Some(series.to_csv()),
        }
    }

    fn failed(seed: u64, replicate: Option<usize>, message: String) -> Self {
        Self {
            summary: CellSummary {
                replicate,
                seed,
                verdict: Verdict::Inconclusive,
                final_value: None,
                trend: None,
                error: Some(message),
                details: None,
            },
            csv: None,
        }
    }
}

/// Per-replicate state shared by its cells.
struct Replicate<'a> {
    index: usize,
    seed: u64,
    traj: &'a Trajectory,
    directing: Vec<(usize, Directing)>,
}

impl Replicate<'_> {
    fn directing(&mut self, proxy_horizon: usize) -> cidlab_core::Result<&Directing> {
        if let Some(pos) = self.directing.iter().position(|(h, _)| *h == proxy_horizon) {
            return Ok(&self.directing[pos].1);
        }
        let d = models::directing_with(self.traj, DirectingOptions { proxy_horizon })?;
        self.directing.push((proxy_horizon, d));
        Ok(&self.directing.last().expect("just pushed").1)
    }

    fn weights(&self) -> cidlab_core::Result<&models::WeightSequence> {
        match &self.traj.latent {
            Latent::Singular { weights, .. } => Ok(weights),
            _ => Err(cidlab_core::Error::MissingLatent),
        }
    }
}

fn window(lo: f64, hi: f64) -> cidlab_core::Result<CompactWindow> {
    CompactWindow::new(lo, hi)
}

fn replicate_cell(
    config: &ExperimentConfig,
    diag: &DiagnosticConfig,
    rep: &mut Replicate<'_>,
) -> cidlab_core::Result<Option<Cell>> {
    let (seed, index) = (rep.seed, Some(rep.index));
    let cps = config.checkpoints_for(&diag.kind);
    let cell = match &diag.kind {
        Diagnostic::TvCurve(p) => {
            let alpha = rep.directing(p.proxy_horizon)?.clone();
            let series = diagnostics::tv_curve_against(rep.traj, &alpha, cps, p.threshold)?;
            Cell::from_series(seed, index, &series)
        }
        Diagnostic::AtomSupGap(p) => {
            let alpha = rep.directing(p.proxy_horizon)?.clone();
            let mut series = DiagnosticsSeries::new("atom_sup_gap", p.threshold);
            for &n in cps {
                let gap = diagnostics::atom_sup_gap_against(rep.traj, &alpha, n)?;
                series.push(n as u64, gap.value, 0.0);
            }
            series.verdict = Verdict::from_bool(series.last_value().is_some_and(|v| v <= p.threshold));
            Cell::from_series(seed, index, &series)
        }
        Diagnostic::EmpiricalGap(p) => {
            let mut series = DiagnosticsSeries::new("empirical_gap", p.threshold);
            for &n in cps {
                series.push(n as u64, diagnostics::empirical_gap(rep.traj, n)?, 0.0);
            }
            series.verdict = Verdict::from_bool(series.last_value().is_some_and(|v| v <= p.threshold));
            Cell::from_series(seed, index, &series)
        }
        Diagnostic::LpCurve(p) => {
            let k = match (p.window, p.around_v) {
                (Some([lo, hi]), _) => window(lo, hi)?,
                (None, Some(h)) => {
                    let Latent::Increments { z } = &rep.traj.latent else {
                        return Err(cidlab_core::Error::MissingLatent);
                    };
                    let v: f64 = z.iter().sum();
                    window(v - h, v + h)?
                }
                (None, None) => unreachable!("validated at load"),
            };
            let series = diagnostics::lp_curve(rep.traj, &k, p.p, cps)?;
            let mut cell = Cell::from_series(seed, index, &series);
            cell.summary.details = Some(json!({ "window": [k.lo(), k.hi()] }));
            cell
        }
        Diagnostic::MartingaleResidual(p) => {
            if p.replicates.is_some_and(|r| rep.index >= r) {
                return Ok(None);
            }
            let mut targets: Vec<Target> = p.half_lines.iter().map(|&b| Target::HalfLine { b }).collect();
            targets.extend(p.colors.iter().map(|c| Target::Colors { colors: c.clone() }));
            if p.whole_line {
                targets.push(Target::WholeLine);
            }
            let history = rep.traj.prefix(p.history);
            let series = diagnostics::martingale_residual(&rep.traj.spec, history, &targets, p.trials, seed)?;
            let mut cell = Cell::from_series(seed, index, &series);
            let worst = series.points.iter().map(|q| q.value.abs()).fold(0.0, f64::max);
            cell.summary.final_value = Some(worst);
            cell.summary.trend = None;
            cell.summary.details = Some(json!({ "targets": targets }));
            cell
        }
        Diagnostic::SureBounds(_) => {
            let v = rep.weights()?;
            let violations = fractal::sure_bound_violations(v)?;
            let series = fractal::ratio_curve(v)?;
            let mut cell = Cell::from_series(seed, index, &series);
            cell.summary.verdict = Verdict::from_bool(violations == 0 && series.verdict == Verdict::Pass);
            cell.summary.final_value = Some(violations as f64);
            cell.summary.trend = None;
            cell
        }
        Diagnostic::CoverDimension(p) => {
            let v = rep.weights()?;
            let (covers, series) = fractal::cover_dimension_curve(v, &p.depths, p.threshold)?;
            let mut cell = Cell::from_series(seed, index, &series);
            cell.csv = Some(fractal::covers_to_csv(&covers));
            cell
        }
        Diagnostic::CoverMass(p) => {
            let v = rep.weights()?;
            let fraction = fractal::cover_mass_check(v, p.m_prime, p.samples, seed)?;
            let mut series = DiagnosticsSeries::new("cover_mass", 1.0);
            series.push(p.samples as u64, fraction, 0.0);
            series.verdict = Verdict::from_bool(fraction == 1.0);
            let mut cell = Cell::from_series(seed, index, &series);
            cell.summary.trend = None;
            cell
        }
        Diagnostic::DoobCheck(_) | Diagnostic::FdDensity(_) | Diagnostic::IdentityPattern(_) => {
            unreachable!("once-per-experiment diagnostic")
        }
    };
    Ok(Some(cell))
}

fn once_cell(config: &ExperimentConfig, diag: &DiagnosticConfig) -> cidlab_core::Result<Cell> {
    let seed = config.master_seed;
    let cell = match &diag.kind {
        Diagnostic::DoobCheck(p) => {
            let k = window(p.window[0], p.window[1])?;
            let report = diagnostics::doob_check(&config.spec(seed), &k, p.p, p.n_max, p.trials, seed)?;
            let mut cell = Cell::from_series(seed, None, &report.moment_series());
            cell.summary.final_value = Some(report.lhs);
            cell.summary.trend = None;
            cell.summary.details = Some(json!({
                "p": report.p,
                "constant": report.constant,
                "n_max": report.n_max,
                "trials": report.trials,
                "lhs": report.lhs,
                "lhs_stderr": report.lhs_stderr,
                "rhs": report.rhs,
                "rhs_stderr": report.rhs_stderr,
                "argmax_n": report.argmax_n,
            }));
            cell
        }
        Diagnostic::FdDensity(p) => {
            let spec = models::ModelSpec::new(
                ModelParams::Singular(SingularParams { depth: p.depth }),
                seed,
            )?;
            let grid = p
                .points
                .map(|n| models::singular::default_fd_grid(p.depth, n))
                .transpose()?;
            let (density, atom) = models::fd_density_small_n(&spec, grid)?;
            let continuous = density.integral();
            let expected = 1.0 - 0.5f64.powi(p.depth as i32);
            let nonnegative = density.values().iter().all(|&v| v >= 0.0);
            let pass = nonnegative
                && (continuous - expected).abs() <= p.tolerance
                && (continuous + atom - 1.0).abs() <= p.tolerance;
            let mut csv = String::from("x,density\n");
            for (i, &v) in density.values().iter().enumerate() {
                csv.push_str(&format!("{},{}\n", format_real(density.node(i)), format_real(v)));
            }
            Cell {
                summary: CellSummary {
                    replicate: None,
                    seed,
                    verdict: Verdict::from_bool(pass),
                    final_value: Some(continuous),
                    trend: None,
                    error: None,
                    details: Some(json!({
                        "depth": p.depth,
                        "continuous_mass": continuous,
                        "atom_at_zero": atom,
                        "expected_continuous_mass": expected,
                        "grid_points": density.len(),
                    })),
                },
                csv: Some(csv),
            }
        }
        Diagnostic::IdentityPattern(p) => {
            let report = pattern::identity_pattern_search(seed, p.n, p.trials, p.mode, p.cap)?;
            let in_range = p
                .mean_range
                .is_none_or(|[lo, hi]| lo <= report.mean_depth && report.mean_depth <= hi);
            let verdict = match report.verdict {
                Verdict::Pass if in_range => Verdict::Pass,
                Verdict::Pass => Verdict::Fail,
                other => other,
            };
            let mut csv = String::from("trial,depth\n");
            for (i, d) in report.depths.iter().enumerate() {
                csv.push_str(&format!("{},{d}\n", i + 1));
            }
            Cell {
                summary: CellSummary {
                    replicate: None,
                    seed,
                    verdict,
                    final_value: finite(report.mean_depth),
                    trend: None,
                    error: None,
                    details: Some(json!({
                        "n": report.n,
                        "mode": report.mode,
                        "trials": report.trials,
                        "terminated": report.terminated,
                        "mean_depth": report.mean_depth,
                        "stderr": report.stderr,
                        "median": report.median,
                        "q90": report.q90,
                        "q99": report.q99,
                        "max_depth": report.max_depth,
                        "mean_range": p.mean_range,
                    })),
                },
                csv: Some(csv),
            }
        }
        _ => unreachable!("per-replicate diagnostic"),
    };
    Ok(cell)
}

fn threshold_of(kind: &Diagnostic) -> f64 {
    use cidlab_core::diagnostics::thresholds;
    match kind {
        Diagnostic::TvCurve(p) => p.threshold,
        Diagnostic::AtomSupGap(p) => p.threshold,
        Diagnostic::EmpiricalGap(p) => p.threshold,
        Diagnostic::LpCurve(_) => thresholds::LP_STABILITY,
        Diagnostic::MartingaleResidual(_) => thresholds::MC_SIGMAS,
        Diagnostic::DoobCheck(p) => diagnostics::doob_constant(p.p),
        Diagnostic::FdDensity(p) => p.tolerance,
        Diagnostic::SureBounds(_) => 0.0,
        Diagnostic::CoverDimension(p) => p.threshold,
        Diagnostic::CoverMass(_) => 1.0,
        Diagnostic::IdentityPattern(p) => p.cap as f64,
    }
}

fn aggregate(kind: &Diagnostic, cells: &[CellSummary]) -> (Verdict, Option<f64>, Option<f64>, String) {
    let finals: Vec<f64> = cells.iter().filter_map(|c| c.final_value).collect();
    let trends: Vec<f64> = cells.iter().filter_map(|c| c.trend).collect();
    let value = (!finals.is_empty()).then(|| median(&finals));
    let trend = (!trends.is_empty()).then(|| median(&trends));
    if let Diagnostic::TvCurve(p) = kind {
        if cells.iter().any(|c| c.error.is_some()) {
            return (Verdict::Inconclusive, value, trend, tv_rule(p));
        }
        let negative = cells.iter().filter(|c| c.trend.is_some_and(|t| t < 0.0)).count();
        let fraction = negative as f64 / cells.len() as f64;
        let pass = value.is_some_and(|v| v <= p.threshold) && fraction >= p.min_trend_fraction;
        return (Verdict::from_bool(pass), value, trend, tv_rule(p));
    }
    let verdict = if cells.iter().any(|c| c.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if !cells.is_empty() && cells.iter().all(|c| c.verdict == Verdict::Pass) {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    (verdict, value, trend, "every cell passes".to_string())
}

fn tv_rule(p: &crate::config::TvCurveParams) -> String {
    format!(
        "median final value <= {} and negative trend in >= {} of replicates",
        p.threshold, p.min_trend_fraction
    )
}

/// Execute every cell of `config` and write the artifacts under its output
/// directory.
pub fn run(config: &ExperimentConfig, jobs: Option<usize>) -> Result<RunManifest, RunError> {
    let started = Instant::now();
    let root = config.output_dir.clone();
    std::fs::create_dir_all(&root).map_err(|source| RunError::Io {
        path: root.clone(),
        source,
    })?;
    let seeds = config.replicate_seeds();
    let per_rep: Vec<&DiagnosticConfig> =
        config.diagnostics.iter().filter(|d| d.kind.per_replicate()).collect();
    let once: Vec<&DiagnosticConfig> =
        config.diagnostics.iter().filter(|d| !d.kind.per_replicate()).collect();
    let horizon = config.horizon();

    // One entry per replicate: for each per-replicate diagnostic, its cell.
    let replicate_results: Vec<Vec<Option<Cell>>> = with_pool(jobs, || {
        if per_rep.is_empty() {
            return Vec::new();
        }
        seeds
            .par_iter()
            .enumerate()
            .map(|(index, &seed)| {
                let traj = match models::sample_trajectory(&config.spec(seed), horizon) {
                    Ok(t) => t,
                    Err(e) => {
                        return per_rep
                            .iter()
                            .map(|_| Some(Cell::failed(seed, Some(index), e.to_string())))
                            .collect()
                    }
                };
                let mut rep = Replicate {
                    index,
                    seed,
                    traj: &traj,
                    directing: Vec::new(),
                };
                per_rep
                    .iter()
                    .map(|d| match replicate_cell(config, d, &mut rep) {
                        Ok(cell) => cell,
                        Err(e) => Some(Cell::failed(seed, Some(index), e.to_string())),
                    })
                    .collect()
            })
            .collect()
    })?;
    let once_results: Vec<Cell> = with_pool(jobs, || {
        once.par_iter()
            .map(|d| {
                once_cell(config, d)
                    .unwrap_or_else(|e| Cell::failed(config.master_seed, None, e.to_string()))
            })
            .collect()
    })?;

    let mut files = Vec::new();
    let mut errors = Vec::new();
    let mut verdicts = Vec::new();
    let mut record_for = |diag: &DiagnosticConfig, cells: Vec<Cell>| -> Result<(), RunError> {
        let mut summaries = Vec::with_capacity(cells.len());
        for cell in cells {
            if let Some(csv) = &cell.csv {
                let rel = match cell.summary.replicate {
                    Some(i) => format!("{}/r{i:04}.csv", diag.label),
                    None => format!("{}.csv", diag.label),
                };
                write_file(&root, &rel, csv)?;
                files.push(rel);
            }
            if let Some(message) = &cell.summary.error {
                errors.push(CellError {
                    diagnostic: diag.label.clone(),
                    replicate: cell.summary.replicate,
                    message: message.clone(),
                });
            }
            summaries.push(cell.summary);
        }
        let (verdict, value, trend, rule) = aggregate(&diag.kind, &summaries);
        let record = DiagnosticRecord {
            experiment: config.id.clone(),
            model: config.model.tag(),
            label: diag.label.clone(),
            name: diag.kind.name().to_string(),
            verdict,
            expected_verdict: diag.expected,
            matches_expected: verdict == diag.expected,
            threshold_used: threshold_of(&diag.kind),
            seed: config.master_seed,
            value,
            trend,
            rule,
            cells: summaries,
        };
        let rel = format!("{}.json", diag.label);
        let text = serde_json::to_string_pretty(&record).expect("record serializes") + "\n";
        write_file(&root, &rel, &text)?;
        files.push(rel);
        verdicts.push(VerdictSummary {
            label: diag.label.clone(),
            name: record.name,
            verdict,
            expected_verdict: diag.expected,
            matches_expected: record.matches_expected,
        });
        Ok(())
    };

    let mut replicate_results = replicate_results;
    for (j, diag) in per_rep.iter().enumerate() {
        let cells: Vec<Cell> = replicate_results
            .iter_mut()
            .filter_map(|row| row[j].take())
            .collect();
        record_for(diag, cells)?;
    }
    for (diag, cell) in once.iter().zip(once_results) {
        record_for(diag, vec![cell])?;
    }

    files.sort();
    let all_matched = verdicts.iter().all(|v| v.matches_expected);
    let manifest = RunManifest {
        experiment: config.id.clone(),
        model: config.model.tag(),
        config_hash: config.hash(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        rng_algorithm: cidlab_core::rng::RNG_ALGORITHM.to_string(),
        master_seed: config.master_seed,
        replicate_seeds: seeds,
        files,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        errors,
        verdicts,
        all_matched,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_file(&root, MANIFEST_FILE, &text)?;
    Ok(manifest)
}

/// Sample every replicate's trajectory and write it as JSON and CSV.
pub fn simulate(config: &ExperimentConfig, jobs: Option<usize>) -> Result<RunManifest, RunError> {
    let started = Instant::now();
    let root = config.output_dir.clone();
    let seeds = config.replicate_seeds();
    let horizon = config.horizon();
    let results: Vec<(usize, Result<Trajectory, String>)> = with_pool(jobs, || {
        seeds
            .par_iter()
            .enumerate()
            .map(|(i, &seed)| {
                (
                    i,
                    models::sample_trajectory(&config.spec(seed), horizon).map_err(|e| e.to_string()),
                )
            })
            .collect()
    })?;
    let mut files = Vec::new();
    let mut errors = Vec::new();
    for (i, result) in results {
        match result {
            Ok(traj) => {
                for (ext, body) in [("json", traj.to_json() + "\n"), ("csv", traj.to_csv())] {
                    let rel = format!("trajectories/r{i:04}.{ext}");
                    write_file(&root, &rel, &body)?;
                    files.push(rel);
                }
            }
            Err(message) => errors.push(CellError {
                diagnostic: "simulate".into(),
                replicate: Some(i),
                message,
            }),
        }
    }
    files.sort();
    let manifest = RunManifest {
        experiment: config.id.clone(),
        model: config.model.tag(),
        config_hash: config.hash(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        rng_algorithm: cidlab_core::rng::RNG_ALGORITHM.to_string(),
        master_seed: config.master_seed,
        replicate_seeds: seeds,
        files,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        all_matched: errors.is_empty(),
        errors,
        verdicts: Vec::new(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_file(&root, MANIFEST_FILE, &text)?;
    Ok(manifest)
}
