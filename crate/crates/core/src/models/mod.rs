//! The four generative models, their predictive measures `α_n`, directing
//! measures `α` and (for the Gaussian models) joint densities `g_n`.

pub mod gauss_cid;
pub mod gauss_conj;
mod gaussian;
pub mod polya;
pub mod singular;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{DomainKind, GridDensity, GridSpec, MixedMeasure1D};
use crate::rng::{self, stream};

pub use gauss_cid::{BRule, GaussCidParams};
pub use gauss_conj::GaussConjParams;
pub use polya::{PolyaParams, UrnState};
pub use singular::{SingularParams, WeightSequence};

/// Largest trajectory length for the c.i.d. Gaussian model.
pub const GAUSS_CID_MAX_N: usize = 5000;
/// Largest trajectory length for the other models.
pub const MAX_N: usize = 10_000_000;
/// Largest history length for dense joint densities.
pub const JOINT_DENSITY_MAX_N: usize = 50;
/// Default horizon of the Pólya directing proxy.
pub const DEFAULT_PROXY_HORIZON: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTag {
    Polya,
    GaussConj,
    GaussCid,
    Singular,
}

impl ModelTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Polya => "polya",
            Self::GaussConj => "gauss-conj",
            Self::GaussCid => "gauss-cid",
            Self::Singular => "singular",
        }
    }
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum ModelParams {
    Polya(PolyaParams),
    GaussConj(GaussConjParams),
    GaussCid(GaussCidParams),
    Singular(SingularParams),
}

impl ModelParams {
    pub fn tag(&self) -> ModelTag {
        match self {
            Self::Polya(_) => ModelTag::Polya,
            Self::GaussConj(_) => ModelTag::GaussConj,
            Self::GaussCid(_) => ModelTag::GaussCid,
            Self::Singular(_) => ModelTag::Singular,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Polya(p) => p.validate(),
            Self::GaussConj(p) => p.validate(),
            Self::GaussCid(p) => p.validate(),
            Self::Singular(p) => p.validate(),
        }
    }

    pub fn domain(&self) -> DomainKind {
        match self {
            Self::Polya(_) => DomainKind::FiniteSet,
            _ => DomainKind::RealLine,
        }
    }
}

/// A model together with the seed of its randomness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub params: ModelParams,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(params: ModelParams, seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, seed })
    }

    pub fn tag(&self) -> ModelTag {
        self.params.tag()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            params: self.params.clone(),
            seed,
        }
    }
}

/// Latent state behind a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Latent {
    None,
    /// Random mean `θ` of the conjugate model.
    Theta { theta: f64 },
    /// Walk increments `Z_1..Z_N` of the c.i.d. model.
    Increments { z: Vec<f64> },
    /// Weights `V_1..V_M` and coin rows of the singular model.
    Singular {
        weights: WeightSequence,
        rows: Vec<u64>,
    },
}

/// A seeded realization `x_1..x_N` of one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub spec: ModelSpec,
    pub latent: Latent,
    pub observations: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn prefix(&self, n: usize) -> &[f64] {
        &self.observations[..n.min(self.observations.len())]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trajectory serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidMeasure(e.to_string()))
    }

    /// Observations as CSV with header `index,x` (1-based index).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x\n");
        for (i, x) in self.observations.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, crate::series::format_real(*x)));
        }
        out
    }
}

/// Draw `x_1..x_n` from `spec`, reproducibly from its seed.
pub fn sample_trajectory(spec: &ModelSpec, n: usize) -> Result<Trajectory> {
    spec.params.validate()?;
    let limit = match spec.params {
        ModelParams::GaussCid(_) => GAUSS_CID_MAX_N,
        _ => MAX_N,
    };
    if n == 0 || n > limit {
        return Err(Error::InvalidParameter {
            field: "n",
            reason: format!("trajectory length {n} outside [1, {limit}] for {}", spec.tag()),
        });
    }
    let mut rng = rng::substream(spec.seed, stream::TRAJECTORY);
    let (latent, observations) = match &spec.params {
        ModelParams::Polya(p) => (Latent::None, polya::sample(p, n, &mut rng)),
        ModelParams::GaussConj(p) => {
            let (theta, xs) = gauss_conj::sample(p, n, &mut rng);
            (Latent::Theta { theta }, xs)
        }
        ModelParams::GaussCid(p) => {
            let (z, xs) = gauss_cid::sample(p, n, &mut rng);
            (Latent::Increments { z }, xs)
        }
        ModelParams::Singular(p) => {
            let (weights, rows, xs) = singular::sample(p, n, &mut rng);
            (Latent::Singular { weights, rows }, xs)
        }
    };
    Ok(Trajectory {
        spec: spec.clone(),
        latent,
        observations,
    })
}

/// Closed-form predictive law, before it is laid on a grid.
#[derive(Clone, Debug, PartialEq)]
pub enum PredictiveLaw {
    /// Probabilities of colors `0..k`.
    Categorical(Vec<f64>),
    Gaussian { mean: f64, variance: f64 },
}

impl PredictiveLaw {
    /// Lay the law on `grid`, or on `mean ± 8 sd` with 4096 nodes.
    pub fn to_measure(&self, grid: Option<GridSpec>) -> Result<MixedMeasure1D> {
        match self {
            Self::Categorical(p) => MixedMeasure1D::finite(p),
            Self::Gaussian { mean, variance } => {
                let sd = variance.sqrt();
                if !(sd > 0.0) {
                    return Err(Error::DegeneratePredictive(*variance));
                }
                let spec = match grid {
                    Some(g) => g,
                    None => GridSpec::gaussian(*mean, sd)
                        .map_err(|_| Error::DegeneratePredictive(*variance))?,
                };
                MixedMeasure1D::gaussian_on(*mean, *variance, spec)
            }
        }
    }

    pub fn gaussian(&self) -> Option<(f64, f64)> {
        match self {
            Self::Gaussian { mean, variance } => Some((*mean, *variance)),
            Self::Categorical(_) => None,
        }
    }
}

/// Predictive law of `X_{n+1}` given `history = x_1..x_n`.
pub fn predictive_law(spec: &ModelSpec, history: &[f64]) -> Result<PredictiveLaw> {
    match &spec.params {
        ModelParams::Polya(p) => {
            let state = UrnState::from_history(p, history)?;
            Ok(PredictiveLaw::Categorical(state.predictive(p)))
        }
        ModelParams::GaussConj(p) => {
            check_finite(history)?;
            let (mean, variance) = p.predictive(history);
            Ok(PredictiveLaw::Gaussian { mean, variance })
        }
        ModelParams::GaussCid(p) => {
            check_finite(history)?;
            let (mean, variance) = p.predictive(history);
            Ok(PredictiveLaw::Gaussian { mean, variance })
        }
        ModelParams::Singular(_) => Err(Error::PredictiveIntractable),
    }
}

/// `α_n` as a measure on the default grid.
pub fn predictive(spec: &ModelSpec, history: &[f64]) -> Result<MixedMeasure1D> {
    predictive_law(spec, history)?.to_measure(None)
}

fn check_finite(history: &[f64]) -> Result<()> {
    match history.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(Error::InvalidHistory(format!("non-finite observation {x}"))),
        None => Ok(()),
    }
}

/// How a directing measure was obtained.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DirectingKind {
    Exact,
    /// `δ_V` with `V` replaced by `Σ_{i≤N} Z_i`; the omitted part is normal
    /// with the reported standard deviation.
    Truncated { tail_sd: f64 },
    /// `α_{N}` of an extended run standing in for the limit.
    Proxy { horizon: usize },
    /// Atoms of the truncated sum; every location is within the reported
    /// bound of the untruncated one.
    Enumerated { depth: usize, location_error: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Directing {
    pub measure: MixedMeasure1D,
    pub kind: DirectingKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectingOptions {
    pub proxy_horizon: usize,
}

impl Default for DirectingOptions {
    fn default() -> Self {
        Self {
            proxy_horizon: DEFAULT_PROXY_HORIZON,
        }
    }
}

/// Directing random measure `α` on the trajectory's sample point.
pub fn directing(traj: &Trajectory) -> Result<Directing> {
    directing_with(traj, DirectingOptions::default())
}

pub fn directing_with(traj: &Trajectory, options: DirectingOptions) -> Result<Directing> {
    match (&traj.spec.params, &traj.latent) {
        (ModelParams::GaussConj(p), Latent::Theta { theta }) => Ok(Directing {
            measure: MixedMeasure1D::gaussian(*theta, p.noise_var)?,
            kind: DirectingKind::Exact,
        }),
        (ModelParams::GaussCid(p), Latent::Increments { z }) => {
            let v: f64 = z.iter().sum();
            Ok(Directing {
                measure: MixedMeasure1D::dirac(v)?,
                kind: DirectingKind::Truncated {
                    tail_sd: p.tail(z.len()).sqrt(),
                },
            })
        }
        (ModelParams::Polya(p), _) => {
            let horizon = options.proxy_horizon.max(traj.len());
            let state = polya_extend(p, traj, horizon)?;
            Ok(Directing {
                measure: MixedMeasure1D::finite(&state.predictive(p))?,
                kind: DirectingKind::Proxy { horizon },
            })
        }
        (ModelParams::Singular(p), Latent::Singular { weights, .. }) => Ok(Directing {
            measure: singular::directing_atoms(weights)?,
            kind: DirectingKind::Enumerated {
                depth: p.depth,
                location_error: p.truncation_bound(),
            },
        }),
        _ => Err(Error::MissingLatent),
    }
}

/// Continue an urn trajectory to `horizon` draws on its own extension stream.
pub fn polya_extend(params: &PolyaParams, traj: &Trajectory, horizon: usize) -> Result<UrnState> {
    let mut state = UrnState::from_history(params, &traj.observations)?;
    let mut rng = rng::substream(traj.spec.seed, stream::PROXY_EXTENSION);
    while (state.draws() as usize) < horizon {
        state.draw(params, &mut rng);
    }
    Ok(state)
}

/// Bias estimate for the Pólya proxy: TV between `α_N` and `α_{2N}` on the
/// same extension path.
pub fn polya_proxy_bias(traj: &Trajectory, horizon: usize) -> Result<f64> {
    let ModelParams::Polya(p) = &traj.spec.params else {
        return Err(Error::InvalidParameter {
            field: "model",
            reason: "proxy bias applies to the polya model".into(),
        });
    };
    let horizon = horizon.max(traj.len());
    let at = polya_extend(p, traj, horizon)?;
    let doubled = polya_extend(p, traj, 2 * horizon)?;
    crate::measure::tv_distance(
        &MixedMeasure1D::finite(&at.predictive(p))?,
        &MixedMeasure1D::finite(&doubled.predictive(p))?,
    )
}

fn joint(spec: &ModelSpec, n: usize) -> Result<gaussian::DenseGaussian> {
    if n > JOINT_DENSITY_MAX_N + 1 {
        return Err(Error::InvalidParameter {
            field: "n",
            reason: format!("joint densities are limited to n <= {JOINT_DENSITY_MAX_N}"),
        });
    }
    match &spec.params {
        ModelParams::GaussConj(p) => p.joint(n),
        ModelParams::GaussCid(p) => p.joint(n),
        _ => Err(Error::JointDensityUnavailable),
    }
}

/// `log g_n(x_1..x_n)`.
pub fn log_joint_density(spec: &ModelSpec, point: &[f64]) -> Result<f64> {
    check_finite(point)?;
    if point.len() > JOINT_DENSITY_MAX_N {
        return Err(Error::InvalidParameter {
            field: "n",
            reason: format!("joint densities are limited to n <= {JOINT_DENSITY_MAX_N}"),
        });
    }
    if point.is_empty() {
        joint(spec, 1)?;
        return Ok(0.0);
    }
    Ok(joint(spec, point.len())?.log_density(point))
}

/// Density `g_n` of `(X_1..X_n)` with respect to Lebesgue measure.
pub fn joint_density(spec: &ModelSpec, point: &[f64]) -> Result<f64> {
    log_joint_density(spec, point).map(f64::exp)
}

/// `x ↦ g_{n+1}(x_1..x_n, x) / g_n(x_1..x_n)` on the nodes of `grid`.
pub fn predictive_density_ratio(
    spec: &ModelSpec,
    history: &[f64],
    grid: GridSpec,
) -> Result<GridDensity> {
    check_finite(history)?;
    if history.len() > JOINT_DENSITY_MAX_N {
        return Err(Error::InvalidParameter {
            field: "n",
            reason: format!("joint densities are limited to n <= {JOINT_DENSITY_MAX_N}"),
        });
    }
    let dense = joint(spec, history.len() + 1)?;
    let log_gn = dense.log_density_prefix(history);
    let mut point = history.to_vec();
    point.push(0.0);
    let last = point.len() - 1;
    GridDensity::from_fn(grid, |x| {
        point[last] = x;
        (dense.log_density(&point) - log_gn).exp()
    })
}

/// Law of `X_1` for the singular model, with the atom at 0 returned apart.
pub fn fd_density_small_n(spec: &ModelSpec, grid: Option<GridSpec>) -> Result<(GridDensity, f64)> {
    let ModelParams::Singular(p) = &spec.params else {
        return Err(Error::InvalidParameter {
            field: "model",
            reason: "fd_density_small_n applies to the singular model".into(),
        });
    };
    if p.depth > singular::MAX_MIXTURE_DEPTH {
        return Err(Error::MixtureTooLarge(p.depth));
    }
    let grid = match grid {
        Some(g) => g,
        None => singular::default_fd_grid(p.depth, 8193)?,
    };
    singular::fd_density_small_n(p.depth, grid)
}

/// Draw `X_{n+1}` from the predictive given `history`.
pub(crate) fn draw_next(spec: &ModelSpec, history: &[f64], rng: &mut rng::SimRng) -> Result<f64> {
    use rand::Rng;
    match &spec.params {
        ModelParams::Polya(p) => {
            let mut state = UrnState::from_history(p, history)?;
            Ok(state.draw(p, rng) as f64)
        }
        ModelParams::GaussConj(p) => Ok(gauss_conj::draw_predictive(p, history, rng)),
        ModelParams::GaussCid(p) => {
            let (m, v) = p.predictive(history);
            Ok(m + v.sqrt() * rng.sample::<f64, _>(rand_distr::StandardNormal))
        }
        ModelParams::Singular(_) => Err(Error::PredictiveIntractable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conj() -> ModelSpec {
        ModelSpec::new(ModelParams::GaussConj(GaussConjParams::default()), 11).unwrap()
    }

    #[test]
    fn sampling_is_reproducible() {
        let spec = conj();
        let a = sample_trajectory(&spec, 50).unwrap();
        let b = sample_trajectory(&spec, 50).unwrap();
        assert_eq!(a, b);
        let c = sample_trajectory(&spec.with_seed(12), 50).unwrap();
        assert_ne!(a.observations, c.observations);
    }

    #[test]
    fn length_limits() {
        let cid = ModelSpec::new(ModelParams::GaussCid(GaussCidParams::default()), 1).unwrap();
        assert!(sample_trajectory(&cid, 0).is_err());
        assert!(sample_trajectory(&cid, GAUSS_CID_MAX_N + 1).is_err());
        assert!(sample_trajectory(&cid, 10).is_ok());
    }

    #[test]
    fn singular_predictive_is_intractable() {
        let spec = ModelSpec::new(ModelParams::Singular(SingularParams { depth: 10 }), 1).unwrap();
        assert_eq!(predictive(&spec, &[0.1]), Err(Error::PredictiveIntractable));
    }

    #[test]
    fn joint_density_unavailable_for_polya_and_singular() {
        let polya = ModelSpec::new(ModelParams::Polya(PolyaParams::new(vec![1.0, 1.0]).unwrap()), 1)
            .unwrap();
        assert_eq!(joint_density(&polya, &[0.0]), Err(Error::JointDensityUnavailable));
        let sing = ModelSpec::new(ModelParams::Singular(SingularParams { depth: 5 }), 1).unwrap();
        assert_eq!(joint_density(&sing, &[0.0]), Err(Error::JointDensityUnavailable));
    }

    #[test]
    fn directing_requires_latent() {
        let spec = conj();
        let traj = Trajectory {
            spec,
            latent: Latent::None,
            observations: vec![0.0],
        };
        assert_eq!(directing(&traj), Err(Error::MissingLatent));
    }

    #[test]
    fn trajectory_json_round_trip() {
        for params in [
            ModelParams::GaussCid(GaussCidParams::default()),
            ModelParams::Singular(SingularParams { depth: 8 }),
            ModelParams::Polya(PolyaParams::new(vec![1.0, 2.0]).unwrap()),
        ] {
            let t = sample_trajectory(&ModelSpec::new(params, 5).unwrap(), 20).unwrap();
            assert_eq!(Trajectory::from_json(&t.to_json()).unwrap(), t);
        }
    }

    #[test]
    fn csv_export_header() {
        let t = sample_trajectory(&conj(), 3).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("index,x\n1,"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn empty_history_predictive_is_prior() {
        let spec = conj();
        assert_eq!(
            predictive_law(&spec, &[]).unwrap(),
            PredictiveLaw::Gaussian { mean: 0.0, variance: 2.0 }
        );
    }
}
