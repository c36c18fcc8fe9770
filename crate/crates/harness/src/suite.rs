//! The shipped default experiments.

use std::path::{Path, PathBuf};

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::{self, ReportRow};
use crate::run::{self, RunError, RunManifest, MANIFEST_FILE};

/// `(file name, contents)` of each shipped config.
pub const DEFAULT_CONFIGS: [(&str, &str); 4] = [
    ("polya.toml", include_str!("../configs/polya.toml")),
    ("gauss-conj.toml", include_str!("../configs/gauss-conj.toml")),
    ("gauss-cid.toml", include_str!("../configs/gauss-cid.toml")),
    ("singular.toml", include_str!("../configs/singular.toml")),
];

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("{name}: {source}")]
    Config { name: String, source: ConfigError },
    #[error(transparent)]
    Run(#[from] RunError),
}

pub struct SuiteOutcome {
    pub manifests: Vec<RunManifest>,
    pub rows: Vec<ReportRow>,
    pub all_matched: bool,
}

pub fn default_configs() -> Result<Vec<ExperimentConfig>, SuiteError> {
    DEFAULT_CONFIGS
        .iter()
        .map(|(name, text)| {
            ExperimentConfig::from_toml(text).map_err(|source| SuiteError::Config {
                name: name.to_string(),
                source,
            })
        })
        .collect()
}

/// Run every shipped experiment into `out/<id>` and write `report.csv` and
/// `report.txt` under `out`. `seed` replaces each config's master seed.
pub fn run_suite(out: &Path, seed: Option<u64>, jobs: Option<usize>) -> Result<SuiteOutcome, SuiteError> {
    let mut manifests = Vec::new();
    let mut paths: Vec<PathBuf> = Vec::new();
    for config in default_configs()? {
        let dir = out.join(&config.id);
        let mut config = config.with_output_dir(dir.clone());
        if let Some(s) = seed {
            config = config.with_seed(s);
        }
        manifests.push(run::run(&config, jobs)?);
        paths.push(dir.join(MANIFEST_FILE));
    }
    let rows = report::report(&paths);
    write(out, "report.csv", &report::to_csv(&rows))?;
    write(out, "report.txt", &report::to_table(&rows))?;
    let all_matched = manifests.iter().all(|m| m.all_matched);
    Ok(SuiteOutcome {
        manifests,
        rows,
        all_matched,
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), RunError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|source| RunError::Io { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_configs_load() {
        let configs = default_configs().unwrap();
        let ids: Vec<&str> = configs.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["polya", "gauss-conj", "gauss-cid", "singular"]);
    }
}
