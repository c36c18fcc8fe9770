//! Experiment configuration.
//!
//! A config is a TOML document:
//!
//! ```toml
//! id = "gauss-conj"
//! master_seed = 7
//! replicates = 100
//! checkpoints = [1, 3, 10, 30, 100, 300, 1000]
//! output_dir = "out/gauss-conj"
//!
//! [model]
//! tag = "gauss-conj"
//! prior_mean = 0.0
//! prior_var = 1.0
//! noise_var = 1.0
//!
//! [[diagnostics]]
//! name = "tv_curve"
//! threshold = 0.02
//! expected_verdict = "pass"
//! ```
//!
//! Each `[[diagnostics]]` entry carries a `name`, an optional `label` (needed
//! when one diagnostic appears twice), an optional `expected_verdict`
//! (default `pass`) and the diagnostic's own parameters.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use cidlab_core::diagnostics::ScanMode;
use cidlab_core::models::{ModelParams, ModelSpec, ModelTag, GAUSS_CID_MAX_N, MAX_N};
use cidlab_core::Verdict;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {reason}")]
    Field { field: String, reason: String },
    #[error("unknown diagnostic: {0}")]
    UnknownDiagnostic(String),
}

fn field(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    id: String,
    master_seed: u64,
    replicates: usize,
    checkpoints: Vec<usize>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    model: ModelParams,
    #[serde(default)]
    diagnostics: Vec<DiagnosticEntry>,
}

/// One `[[diagnostics]]` entry as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_verdict: Option<Verdict>,
    #[serde(flatten)]
    pub params: toml::Table,
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub master_seed: u64,
    pub replicates: usize,
    pub checkpoints: Vec<usize>,
    pub output_dir: PathBuf,
    pub model: ModelParams,
    pub diagnostics: Vec<DiagnosticConfig>,
    raw: RawConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticConfig {
    pub label: String,
    pub expected: Verdict,
    pub kind: Diagnostic,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    TvCurve(TvCurveParams),
    AtomSupGap(AtomGapParams),
    EmpiricalGap(EmpiricalGapParams),
    LpCurve(LpCurveParams),
    MartingaleResidual(MartingaleParams),
    DoobCheck(DoobParams),
    FdDensity(FdDensityParams),
    SureBounds(SureBoundsParams),
    CoverDimension(CoverDimensionParams),
    CoverMass(CoverMassParams),
    IdentityPattern(PatternParams),
}

pub const DIAGNOSTIC_NAMES: [&str; 11] = [
    "tv_curve",
    "atom_sup_gap",
    "empirical_gap",
    "lp_curve",
    "martingale_residual",
    "doob_check",
    "fd_density",
    "sure_bounds",
    "cover_dimension",
    "cover_mass",
    "identity_pattern",
];

impl Diagnostic {
    pub fn name(&self) -> &'static str {
        match self {
            Self::TvCurve(_) => "tv_curve",
            Self::AtomSupGap(_) => "atom_sup_gap",
            Self::EmpiricalGap(_) => "empirical_gap",
            Self::LpCurve(_) => "lp_curve",
            Self::MartingaleResidual(_) => "martingale_residual",
            Self::DoobCheck(_) => "doob_check",
            Self::FdDensity(_) => "fd_density",
            Self::SureBounds(_) => "sure_bounds",
            Self::CoverDimension(_) => "cover_dimension",
            Self::CoverMass(_) => "cover_mass",
            Self::IdentityPattern(_) => "identity_pattern",
        }
    }

    fn models(&self) -> &'static [ModelTag] {
        use ModelTag::*;
        match self {
            Self::TvCurve(_) | Self::AtomSupGap(_) | Self::MartingaleResidual(_) => {
                &[Polya, GaussConj, GaussCid]
            }
            Self::EmpiricalGap(_) | Self::LpCurve(_) | Self::DoobCheck(_) => &[GaussConj, GaussCid],
            Self::FdDensity(_)
            | Self::SureBounds(_)
            | Self::CoverDimension(_)
            | Self::CoverMass(_)
            | Self::IdentityPattern(_) => &[Singular],
        }
    }

    /// Whether the diagnostic runs once per replicate (as opposed to once
    /// per experiment).
    pub fn per_replicate(&self) -> bool {
        !matches!(
            self,
            Self::DoobCheck(_) | Self::FdDensity(_) | Self::IdentityPattern(_)
        )
    }

    /// Checkpoint override for series diagnostics.
    fn checkpoints(&self) -> Option<&[usize]> {
        match self {
            Self::TvCurve(p) => p.checkpoints.as_deref(),
            Self::AtomSupGap(p) => p.checkpoints.as_deref(),
            Self::EmpiricalGap(p) => p.checkpoints.as_deref(),
            Self::LpCurve(p) => p.checkpoints.as_deref(),
            _ => None,
        }
    }

    fn parse(name: &str, params: &toml::Table) -> Result<Self, ConfigError> {
        Ok(match name {
            "tv_curve" => Self::TvCurve(typed(name, params)?),
            "atom_sup_gap" => Self::AtomSupGap(typed(name, params)?),
            "empirical_gap" => Self::EmpiricalGap(typed(name, params)?),
            "lp_curve" => Self::LpCurve(typed(name, params)?),
            "martingale_residual" => Self::MartingaleResidual(typed(name, params)?),
            "doob_check" => Self::DoobCheck(typed(name, params)?),
            "fd_density" => Self::FdDensity(typed(name, params)?),
            "sure_bounds" => Self::SureBounds(typed(name, params)?),
            "cover_dimension" => Self::CoverDimension(typed(name, params)?),
            "cover_mass" => Self::CoverMass(typed(name, params)?),
            "identity_pattern" => Self::IdentityPattern(typed(name, params)?),
            other => return Err(ConfigError::UnknownDiagnostic(other.to_string())),
        })
    }
}

fn typed<T: DeserializeOwned>(name: &str, params: &toml::Table) -> Result<T, ConfigError> {
    T::deserialize(toml::Value::Table(params.clone()))
        .map_err(|e| field(format!("diagnostics.{name}"), e.to_string()))
}

fn default_min_trend_fraction() -> f64 {
    cidlab_core::diagnostics::thresholds::MIN_NEGATIVE_TREND_FRACTION
}

fn default_proxy_horizon() -> usize {
    cidlab_core::models::DEFAULT_PROXY_HORIZON
}

fn default_p() -> f64 {
    2.0
}

/// Median final value at most `threshold` and a negative trend in at least
/// `min_trend_fraction` of the replicates.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvCurveParams {
    pub threshold: f64,
    #[serde(default = "default_min_trend_fraction")]
    pub min_trend_fraction: f64,
    #[serde(default = "default_proxy_horizon")]
    pub proxy_horizon: usize,
    #[serde(default)]
    pub checkpoints: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomGapParams {
    pub threshold: f64,
    #[serde(default = "default_proxy_horizon")]
    pub proxy_horizon: usize,
    #[serde(default)]
    pub checkpoints: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalGapParams {
    pub threshold: f64,
    #[serde(default)]
    pub checkpoints: Option<Vec<usize>>,
}

/// Window given either as `window = [lo, hi]` or as `around_v = h` for the
/// window `[V − h, V + h]` around the c.i.d. limit.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpCurveParams {
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub around_v: Option<f64>,
    #[serde(default)]
    pub checkpoints: Option<Vec<usize>>,
}

fn default_history() -> usize {
    10
}

fn default_mc_trials() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleParams {
    /// Length of the trajectory prefix used as history.
    #[serde(default = "default_history")]
    pub history: usize,
    /// Targets `(-∞, b]`.
    #[serde(default)]
    pub half_lines: Vec<f64>,
    /// Color sets (urn only).
    #[serde(default)]
    pub colors: Vec<Vec<usize>>,
    #[serde(default)]
    pub whole_line: bool,
    #[serde(default = "default_mc_trials")]
    pub trials: usize,
    /// Run on the first `replicates` replicates only.
    #[serde(default)]
    pub replicates: Option<usize>,
}

fn default_n_max() -> usize {
    100
}

fn default_doob_trials() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoobParams {
    pub window: [f64; 2],
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_doob_trials")]
    pub trials: usize,
}

fn default_fd_depth() -> usize {
    10
}

fn default_fd_tolerance() -> f64 {
    1e-3
}

/// Law of `X_1` at a small truncation depth; passes when the total mass is
/// within `tolerance` of 1 and the continuous mass is `1 − 2^{−depth}`
/// within `tolerance`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdDensityParams {
    #[serde(default = "default_fd_depth")]
    pub depth: usize,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default = "default_fd_tolerance")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SureBoundsParams {}

fn default_cover_depths() -> Vec<usize> {
    vec![5, 10, 15, 20]
}

fn default_cover_threshold() -> f64 {
    cidlab_core::diagnostics::thresholds::COVER_DIM_DEPTH20
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverDimensionParams {
    #[serde(default = "default_cover_depths")]
    pub depths: Vec<usize>,
    #[serde(default = "default_cover_threshold")]
    pub threshold: f64,
}

fn default_m_prime() -> usize {
    5
}

fn default_samples() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverMassParams {
    #[serde(default = "default_m_prime")]
    pub m_prime: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_pattern_trials() -> usize {
    1000
}

fn default_mode() -> ScanMode {
    ScanMode::Sliding
}

fn default_cap() -> u64 {
    cidlab_core::diagnostics::pattern::DEFAULT_ROW_CAP
}

/// Identity-block search. With `mean_range` the mean completion row must
/// also fall inside the range.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternParams {
    pub n: usize,
    #[serde(default = "default_pattern_trials")]
    pub trials: usize,
    #[serde(default = "default_mode")]
    pub mode: ScanMode,
    #[serde(default = "default_cap")]
    pub cap: u64,
    #[serde(default)]
    pub mean_range: Option<[f64; 2]>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        if raw.id.is_empty() || raw.id.contains(['/', '\\']) {
            return Err(field("id", "must be a nonempty name without path separators"));
        }
        if raw.replicates == 0 {
            return Err(field("replicates", "must be at least 1"));
        }
        check_checkpoints("checkpoints", &raw.checkpoints)?;
        raw.model
            .validate()
            .map_err(|e| field("model", e.to_string()))?;
        let tag = raw.model.tag();

        let mut labels = BTreeSet::new();
        let mut diagnostics = Vec::with_capacity(raw.diagnostics.len());
        for entry in &raw.diagnostics {
            let kind = Diagnostic::parse(&entry.name, &entry.params)?;
            if !kind.models().contains(&tag) {
                return Err(field(
                    format!("diagnostics.{}", entry.name),
                    format!("not applicable to the {tag} model"),
                ));
            }
            if let Some(cp) = kind.checkpoints() {
                check_checkpoints(&format!("diagnostics.{}.checkpoints", entry.name), cp)?;
            }
            validate_params(&kind, tag)?;
            let label = entry.label.clone().unwrap_or_else(|| entry.name.clone());
            if label.is_empty() || label.contains(['/', '\\']) || label == "manifest" {
                return Err(field("diagnostics.label", format!("bad label {label:?}")));
            }
            if !labels.insert(label.clone()) {
                return Err(field("diagnostics.label", format!("duplicate label {label:?}")));
            }
            diagnostics.push(DiagnosticConfig {
                label,
                expected: entry.expected_verdict.unwrap_or(Verdict::Pass),
                kind,
            });
        }

        let config = Self {
            id: raw.id.clone(),
            master_seed: raw.master_seed,
            replicates: raw.replicates,
            checkpoints: raw.checkpoints.clone(),
            output_dir: raw
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("out").join(&raw.id)),
            model: raw.model.clone(),
            diagnostics,
            raw,
        };
        let horizon = config.horizon();
        let limit = if tag == ModelTag::GaussCid { GAUSS_CID_MAX_N } else { MAX_N };
        if horizon > limit {
            return Err(field(
                "checkpoints",
                format!("trajectory length {horizon} exceeds the {tag} limit {limit}"),
            ));
        }
        Ok(config)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self.raw.master_seed = seed;
        self
    }

    pub fn with_replicates(mut self, replicates: usize) -> Result<Self, ConfigError> {
        if replicates == 0 {
            return Err(field("replicates", "must be at least 1"));
        }
        self.replicates = replicates;
        self.raw.replicates = replicates;
        Ok(self)
    }

    pub fn with_output_dir(mut self, dir: PathBuf) -> Self {
        self.raw.output_dir = Some(dir.clone());
        self.output_dir = dir;
        self
    }

    /// Keep only diagnostics accepted by `keep`.
    pub fn retain_diagnostics(mut self, keep: impl Fn(&Diagnostic) -> bool) -> Self {
        let kept: BTreeSet<String> = self
            .diagnostics
            .iter()
            .filter(|d| keep(&d.kind))
            .map(|d| d.label.clone())
            .collect();
        self.diagnostics.retain(|d| kept.contains(&d.label));
        self.raw.diagnostics.retain(|e| {
            kept.contains(e.label.as_ref().unwrap_or(&e.name))
        });
        self
    }

    pub fn spec(&self, seed: u64) -> ModelSpec {
        ModelSpec {
            params: self.model.clone(),
            seed,
        }
    }

    /// Seeds of the replicates, derived from the master seed.
    pub fn replicate_seeds(&self) -> Vec<u64> {
        (0..self.replicates as u64)
            .map(|i| cidlab_core::rng::replicate_seed(self.master_seed, i))
            .collect()
    }

    /// Trajectory length needed by the per-replicate diagnostics.
    pub fn horizon(&self) -> usize {
        let mut n = self.checkpoints.last().copied().unwrap_or(1);
        for d in &self.diagnostics {
            if let Some(cp) = d.kind.checkpoints() {
                n = n.max(cp.last().copied().unwrap_or(1));
            }
            if let Diagnostic::MartingaleResidual(p) = &d.kind {
                n = n.max(p.history);
            }
        }
        n.max(1)
    }

    pub fn checkpoints_for<'a>(&'a self, d: &'a Diagnostic) -> &'a [usize] {
        d.checkpoints().unwrap_or(&self.checkpoints)
    }

    /// SHA-256 of the canonical JSON form of the config, hex encoded. The
    /// output directory is not part of the hash.
    pub fn hash(&self) -> String {
        let mut raw = self.raw.clone();
        raw.output_dir = None;
        let canonical = serde_json::to_string(&raw).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn check_checkpoints(name: &str, checkpoints: &[usize]) -> Result<(), ConfigError> {
    if checkpoints.is_empty() {
        return Err(field(name, "must not be empty"));
    }
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(field(name, "must be strictly ascending"));
    }
    Ok(())
}

fn validate_params(kind: &Diagnostic, tag: ModelTag) -> Result<(), ConfigError> {
    let name = kind.name();
    let bad = |reason: &str| Err(field(format!("diagnostics.{name}"), reason));
    match kind {
        Diagnostic::TvCurve(p) => {
            if !(0.0..=1.0).contains(&p.min_trend_fraction) {
                return bad("min_trend_fraction must lie in [0, 1]");
            }
        }
        Diagnostic::LpCurve(p) => {
            if !(p.p >= 1.0) {
                return bad("p must be at least 1");
            }
            match (p.window, p.around_v) {
                (Some([lo, hi]), None) if lo < hi => {}
                (None, Some(h)) if h > 0.0 && tag == ModelTag::GaussCid => {}
                (None, Some(_)) if tag != ModelTag::GaussCid => {
                    return bad("around_v needs the gauss-cid model")
                }
                _ => return bad("give exactly one of window = [lo, hi] or around_v = h > 0"),
            }
        }
        Diagnostic::MartingaleResidual(p) => {
            if p.half_lines.is_empty() && p.colors.is_empty() && !p.whole_line {
                return bad("no targets");
            }
            if !p.colors.is_empty() && tag != ModelTag::Polya {
                return bad("color targets need the polya model");
            }
            if p.replicates == Some(0) {
                return bad("replicates must be at least 1");
            }
        }
        Diagnostic::DoobCheck(p) => {
            if !(p.window[0] < p.window[1]) || !(p.p > 1.0) {
                return bad("need window lo < hi and p > 1");
            }
        }
        Diagnostic::FdDensity(p) => {
            if !(1..=cidlab_core::models::singular::MAX_MIXTURE_DEPTH).contains(&p.depth) {
                return bad("depth must lie in 1..=12");
            }
        }
        Diagnostic::CoverDimension(p) => {
            if p.depths.is_empty() {
                return bad("depths must not be empty");
            }
        }
        Diagnostic::IdentityPattern(p) => {
            if p.trials == 0 {
                return bad("trials must be at least 1");
            }
        }
        _ => {}
    }
    Ok(())
}
