use thiserror::Error;

/// Errors raised by measures, models, diagnostics and the fractal analyses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("incompatible domains")]
    IncompatibleDomains,

    #[error("mass deficit: total mass {0} is not 1 within tolerance")]
    MassDeficit(f64),

    #[error("measure exceeds unit mass: {0}")]
    ExcessMass(f64),

    #[error("undefined for unordered finite domain")]
    UnorderedDomain,

    #[error("no density")]
    NoDensity,

    #[error("window outside grid")]
    WindowOutsideGrid,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("predictive density intractable; use fd_density_small_n")]
    PredictiveIntractable,

    #[error("joint density not exposed for this model")]
    JointDensityUnavailable,

    #[error("mixture too large: depth {0} exceeds 12")]
    MixtureTooLarge(usize),

    #[error("history inconsistent with model support: {0}")]
    InvalidHistory(String),

    #[error("missing latent state")]
    MissingLatent,

    #[error("degenerate predictive: variance {0} cannot be resolved on a grid")]
    DegeneratePredictive(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
