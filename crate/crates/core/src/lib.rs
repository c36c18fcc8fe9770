//! Simulation and verification of exchangeable and conditionally identically
//! distributed (c.i.d.) sequences.
//!
//! - [`measure`]: mixed atomic/continuous measures on the line, total
//!   variation and Kolmogorov distances, `L^p` density norms.
//! - [`models`]: the Pólya urn, the conjugate normal model, a c.i.d. normal
//!   sequence and a sequence with singular directing measure; their
//!   predictive measures `α_n`, directing measures `α` and joint densities.
//! - [`diagnostics`]: convergence and martingale checks on trajectories.
//! - [`fractal`]: tail bounds and box-counting covers for the singular model.

pub mod diagnostics;
pub mod error;
pub mod fractal;
pub mod measure;
pub mod models;
pub mod rng;
pub mod series;

pub use error::{Error, Result};
pub use measure::{
    decompose, kolmogorov_distance, lp_density_norm, tv_distance, CompactWindow, DomainKind,
    GridDensity, GridSpec, MixedMeasure1D,
};
pub use models::{ModelParams, ModelSpec, ModelTag, Trajectory, WeightSequence};
pub use series::{DiagnosticsSeries, Verdict};
