//! Python bindings: measures, models, trajectories and the diagnostics that
//! run on them, plus the experiment runner.

use std::path::PathBuf;

use cidlab_core::diagnostics::{self, pattern::ScanMode, Target};
use cidlab_core::fractal;
use cidlab_core::measure::{self, CompactWindow, DomainKind, GridDensity, MixedMeasure1D};
use cidlab_core::models::{
    self, BRule, GaussCidParams, GaussConjParams, Latent, ModelParams, ModelSpec, PolyaParams,
    SingularParams,
};
use cidlab_core::series::DiagnosticsSeries;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: cidlab_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn window(lo: f64, hi: f64) -> PyResult<CompactWindow> {
    CompactWindow::new(lo, hi).map_err(err)
}

/// Probability measure on the real line or a finite set: atoms plus an
/// optional density on a uniform grid.
#[pyclass(module = "cidlab", frozen)]
struct Measure {
    inner: MixedMeasure1D,
}

#[pymethods]
impl Measure {
    #[staticmethod]
    fn gaussian(mean: f64, variance: f64) -> PyResult<Self> {
        Ok(Self { inner: MixedMeasure1D::gaussian(mean, variance).map_err(err)? })
    }

    #[staticmethod]
    fn dirac(location: f64) -> PyResult<Self> {
        Ok(Self { inner: MixedMeasure1D::dirac(location).map_err(err)? })
    }

    /// Probability vector on `{0, ..., k-1}`.
    #[staticmethod]
    fn finite(probabilities: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: MixedMeasure1D::finite(&probabilities).map_err(err)? })
    }

    /// Atoms `[(location, mass)]` plus an optional density given by its
    /// values on the grid `lo, lo + step, ...`.
    #[staticmethod]
    #[pyo3(signature = (atoms, lo=None, step=None, values=None))]
    fn mixed(
        atoms: Vec<(f64, f64)>,
        lo: Option<f64>,
        step: Option<f64>,
        values: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let density = match (lo, step, values) {
            (Some(lo), Some(step), Some(values)) => Some(GridDensity::new(lo, step, values).map_err(err)?),
            (None, None, None) => None,
            _ => return Err(PyValueError::new_err("lo, step and values go together")),
        };
        let inner = MixedMeasure1D::new(atoms, density, DomainKind::RealLine).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: MixedMeasure1D::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn tv(&self, other: &Measure) -> PyResult<f64> {
        measure::tv_distance(&self.inner, &other.inner).map_err(err)
    }

    fn kolmogorov(&self, other: &Measure) -> PyResult<f64> {
        measure::kolmogorov_distance(&self.inner, &other.inner).map_err(err)
    }

    /// `∫_[lo, hi] f^p` for the density part.
    fn lp_norm(&self, lo: f64, hi: f64, p: f64) -> PyResult<f64> {
        measure::lp_density_norm(&self.inner, &window(lo, hi)?, p).map_err(err)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    /// `(continuous part, atomic part)`.
    fn decompose(&self) -> PyResult<(Measure, Measure)> {
        let (c, d) = measure::decompose(&self.inner).map_err(err)?;
        Ok((Measure { inner: c }, Measure { inner: d }))
    }

    #[getter]
    fn atoms(&self) -> Vec<(f64, f64)> {
        self.inner.atoms().iter().map(|a| (a.location, a.mass)).collect()
    }

    #[getter]
    fn total_mass(&self) -> f64 {
        self.inner.total_mass()
    }

    #[getter]
    fn atomic_mass(&self) -> f64 {
        self.inner.atomic_mass()
    }

    #[getter]
    fn continuous_mass(&self) -> f64 {
        self.inner.continuous_mass()
    }

    fn __repr__(&self) -> String {
        format!(
            "Measure(atoms={}, atomic_mass={:.6}, continuous_mass={:.6})",
            self.inner.atoms().len(),
            self.inner.atomic_mass(),
            self.inner.continuous_mass()
        )
    }
}

/// A diagnostic curve: values at checkpoints plus a verdict.
#[pyclass(module = "cidlab", frozen, get_all)]
struct Series {
    label: String,
    n: Vec<u64>,
    values: Vec<f64>,
    stderr: Vec<f64>,
    verdict: String,
    threshold_used: f64,
}

impl From<DiagnosticsSeries> for Series {
    fn from(s: DiagnosticsSeries) -> Self {
        Self {
            label: s.label.clone(),
            n: s.points.iter().map(|p| p.n).collect(),
            values: s.values(),
            stderr: s.points.iter().map(|p| p.stderr).collect(),
            verdict: s.verdict.to_string(),
            threshold_used: s.threshold_used,
        }
    }
}

#[pymethods]
impl Series {
    fn __repr__(&self) -> String {
        format!("Series({}, {} points, {})", self.label, self.n.len(), self.verdict)
    }
}

/// One of the four generative models together with its seed.
#[pyclass(module = "cidlab", frozen)]
struct Model {
    spec: ModelSpec,
}

impl Model {
    fn build(params: ModelParams, seed: u64) -> PyResult<Self> {
        Ok(Self { spec: ModelSpec::new(params, seed).map_err(err)? })
    }
}

#[pymethods]
impl Model {
    #[staticmethod]
    #[pyo3(signature = (weights, seed=0))]
    fn polya(weights: Vec<f64>, seed: u64) -> PyResult<Self> {
        Self::build(ModelParams::Polya(PolyaParams::new(weights).map_err(err)?), seed)
    }

    #[staticmethod]
    #[pyo3(signature = (prior_mean=0.0, prior_var=1.0, noise_var=1.0, seed=0))]
    fn gauss_conj(prior_mean: f64, prior_var: f64, noise_var: f64, seed: u64) -> PyResult<Self> {
        let p = GaussConjParams { prior_mean, prior_var, noise_var };
        Self::build(ModelParams::GaussConj(p), seed)
    }

    /// `rule` is "geometric" (`1 − b_n = rate^n`) or "power"
    /// (`1 − b_n = (n + 1)^-rate`).
    #[staticmethod]
    #[pyo3(signature = (rule="geometric", rate=0.5, seed=0))]
    fn gauss_cid(rule: &str, rate: f64, seed: u64) -> PyResult<Self> {
        let rule = match rule {
            "geometric" => BRule::Geometric,
            "power" => BRule::Power,
            other => return Err(PyValueError::new_err(format!("unknown rule {other:?}"))),
        };
        Self::build(ModelParams::GaussCid(GaussCidParams { rule, rate }), seed)
    }

    #[staticmethod]
    #[pyo3(signature = (depth, seed=0))]
    fn singular(depth: usize, seed: u64) -> PyResult<Self> {
        Self::build(ModelParams::Singular(SingularParams { depth }), seed)
    }

    fn with_seed(&self, seed: u64) -> Self {
        Self { spec: self.spec.with_seed(seed) }
    }

    #[getter]
    fn tag(&self) -> &'static str {
        self.spec.tag().as_str()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.spec.seed
    }

    fn sample(&self, n: usize) -> PyResult<Trajectory> {
        Ok(Trajectory { inner: models::sample_trajectory(&self.spec, n).map_err(err)? })
    }

    /// Predictive law of the next observation given `history`.
    fn predictive(&self, history: Vec<f64>) -> PyResult<Measure> {
        Ok(Measure { inner: models::predictive(&self.spec, &history).map_err(err)? })
    }

    fn joint_density(&self, point: Vec<f64>) -> PyResult<f64> {
        models::joint_density(&self.spec, &point).map_err(err)
    }

    /// `E[α_{n+1}(B)] − α_n(B)` for each target, exact for the urn and by
    /// Monte Carlo otherwise.
    #[pyo3(signature = (history, half_lines=vec![], colors=vec![], whole_line=false, trials=10_000, seed=0))]
    fn martingale_residual(
        &self,
        history: Vec<f64>,
        half_lines: Vec<f64>,
        colors: Vec<Vec<usize>>,
        whole_line: bool,
        trials: usize,
        seed: u64,
    ) -> PyResult<Series> {
        let mut targets: Vec<Target> = half_lines.into_iter().map(|b| Target::HalfLine { b }).collect();
        targets.extend(colors.into_iter().map(|colors| Target::Colors { colors }));
        if whole_line {
            targets.push(Target::WholeLine);
        }
        let s = diagnostics::martingale_residual(&self.spec, &history, &targets, trials, seed).map_err(err)?;
        Ok(s.into())
    }

    #[pyo3(signature = (lo, hi, p=2.0, n_max=100, trials=200, seed=0))]
    fn doob_check<'py>(
        &self,
        py: Python<'py>,
        lo: f64,
        hi: f64,
        p: f64,
        n_max: usize,
        trials: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let r = diagnostics::doob_check(&self.spec, &window(lo, hi)?, p, n_max, trials, seed).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("lhs", r.lhs)?;
        d.set_item("lhs_stderr", r.lhs_stderr)?;
        d.set_item("rhs", r.rhs)?;
        d.set_item("rhs_stderr", r.rhs_stderr)?;
        d.set_item("constant", r.constant)?;
        d.set_item("verdict", r.verdict.to_string())?;
        Ok(d)
    }

    /// Scan coin rows for the `n × n` identity; `mode` is "sliding" or
    /// "disjoint-blocks".
    #[pyo3(signature = (n, trials=1000, mode="sliding"))]
    fn identity_pattern_search<'py>(
        &self,
        py: Python<'py>,
        n: usize,
        trials: usize,
        mode: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mode = match mode {
            "sliding" => ScanMode::Sliding,
            "disjoint-blocks" => ScanMode::DisjointBlocks,
            other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
        };
        let r = diagnostics::identity_pattern_search(&self.spec, n, trials, mode).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("terminated", r.terminated)?;
        d.set_item("mean_depth", r.mean_depth)?;
        d.set_item("stderr", r.stderr)?;
        d.set_item("max_depth", r.max_depth)?;
        d.set_item("verdict", r.verdict.to_string())?;
        Ok(d)
    }

    /// Law of `X_1` for the singular model: `(lo, step, density values,
    /// atom at 0)`.
    fn fd_density(&self) -> PyResult<(f64, f64, Vec<f64>, f64)> {
        let (d, atom) = models::fd_density_small_n(&self.spec, None).map_err(err)?;
        Ok((d.lo(), d.step(), d.values().to_vec(), atom))
    }

    fn __repr__(&self) -> String {
        format!("Model({}, seed={})", self.spec.tag(), self.spec.seed)
    }
}

/// A sampled path with its latent variables.
#[pyclass(module = "cidlab", frozen)]
struct Trajectory {
    inner: models::Trajectory,
}

impl Trajectory {
    fn weights(&self) -> PyResult<&models::WeightSequence> {
        match &self.inner.latent {
            Latent::Singular { weights, .. } => Ok(weights),
            _ => Err(PyValueError::new_err("only singular trajectories carry weights")),
        }
    }
}

#[pymethods]
impl Trajectory {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: models::Trajectory::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn observations(&self) -> Vec<f64> {
        self.inner.observations.clone()
    }

    #[getter]
    fn model(&self) -> Model {
        Model { spec: self.inner.spec.clone() }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Predictive law after the first `n` observations.
    fn predictive(&self, n: usize) -> PyResult<Measure> {
        if n > self.inner.len() {
            return Err(PyValueError::new_err(format!("n = {n} exceeds length {}", self.inner.len())));
        }
        Ok(Measure { inner: models::predictive(&self.inner.spec, self.inner.prefix(n)).map_err(err)? })
    }

    fn directing(&self) -> PyResult<Measure> {
        Ok(Measure { inner: models::directing(&self.inner).map_err(err)?.measure })
    }

    #[pyo3(signature = (checkpoints, threshold=0.02))]
    fn tv_curve(&self, checkpoints: Vec<usize>, threshold: f64) -> PyResult<Series> {
        Ok(diagnostics::tv_curve(&self.inner, &checkpoints, threshold).map_err(err)?.into())
    }

    /// `(max gap, [(location, gap)])` at `n`.
    fn atom_sup_gap(&self, n: usize) -> PyResult<(f64, Vec<(f64, f64)>)> {
        let g = diagnostics::atom_sup_gap(&self.inner, n).map_err(err)?;
        Ok((g.value, g.gaps))
    }

    fn empirical_gap(&self, n: usize) -> PyResult<f64> {
        diagnostics::empirical_gap(&self.inner, n).map_err(err)
    }

    #[pyo3(signature = (lo, hi, checkpoints, p=2.0))]
    fn lp_curve(&self, lo: f64, hi: f64, checkpoints: Vec<usize>, p: f64) -> PyResult<Series> {
        Ok(diagnostics::lp_curve(&self.inner, &window(lo, hi)?, p, &checkpoints).map_err(err)?.into())
    }

    /// Weights `V_1..V_M` of a singular trajectory.
    #[getter]
    fn singular_weights(&self) -> PyResult<Vec<f64>> {
        Ok(self.weights()?.values().to_vec())
    }

    fn sure_bound_violations(&self) -> PyResult<usize> {
        fractal::sure_bound_violations(self.weights()?).map_err(err)
    }

    /// `(interval count, max interval length, dimension estimate)`.
    fn cover_at_depth(&self, depth: usize) -> PyResult<(u64, f64, Option<f64>)> {
        let c = fractal::cover_at_depth(self.weights()?, depth).map_err(err)?;
        Ok((c.interval_count, c.max_interval_length, c.dim_estimate))
    }

    #[pyo3(signature = (depth, samples=100_000, seed=0))]
    fn cover_mass_check(&self, depth: usize, samples: usize, seed: u64) -> PyResult<f64> {
        fractal::cover_mass_check(self.weights()?, depth, samples, seed).map_err(err)
    }
}

#[pyfunction]
fn replicate_seed(master_seed: u64, index: u64) -> u64 {
    cidlab_core::rng::replicate_seed(master_seed, index)
}

/// Run a TOML experiment config and return `(all_matched, [(label,
/// verdict, expected)])`.
#[pyfunction]
#[pyo3(signature = (config, out=None, seed=None, jobs=None))]
fn run_experiment(
    config: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> PyResult<(bool, Vec<(String, String, String)>)> {
    let mut cfg = cidlab_harness::ExperimentConfig::from_path(&config)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    if let Some(seed) = seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = out {
        cfg = cfg.with_output_dir(out);
    }
    let manifest = cidlab_harness::run(&cfg, jobs).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let verdicts = manifest
        .verdicts
        .iter()
        .map(|v| (v.label.clone(), v.verdict.to_string(), v.expected_verdict.to_string()))
        .collect();
    Ok((manifest.all_matched, verdicts))
}

#[pymodule]
fn cidlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Measure>()?;
    m.add_class::<Series>()?;
    m.add_class::<Model>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(replicate_seed, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
