//! Batch runner for cidlab experiments: TOML configs in, CSV series, JSON
//! verdicts and a run manifest out.

pub mod config;
pub mod report;
pub mod run;
pub mod suite;

pub use config::{ConfigError, ExperimentConfig};
pub use run::{run, simulate, RunManifest};
