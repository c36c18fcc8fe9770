use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use cidlab_harness::config::{Diagnostic, ExperimentConfig};
use cidlab_harness::run::RunManifest;
use cidlab_harness::{report, run, suite};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cidlab", version, about = "Simulate exchangeable and c.i.d. sequences and check their convergence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample trajectories and write them as JSON and CSV.
    Simulate(Common),
    /// Run every diagnostic of a config.
    Diagnose(Common),
    /// Run the fractal checks of a singular-model config (default: the shipped one).
    Fractal {
        #[command(flatten)]
        common: Common,
        /// Override the number of weight sequences.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Summarize finished runs from their manifests.
    Report {
        manifests: Vec<PathBuf>,
        /// Also write report.csv and report.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the shipped default experiments.
    Suite {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "suite-out")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn load(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let Some(path) = &common.config else {
        bail!("--config is required");
    };
    let config = ExperimentConfig::from_path(path)?;
    Ok(apply(config, common))
}

fn apply(mut config: ExperimentConfig, common: &Common) -> ExperimentConfig {
    if let Some(seed) = common.seed {
        config = config.with_seed(seed);
    }
    if let Some(out) = &common.out {
        config = config.with_output_dir(out.clone());
    }
    config
}

fn print_verdicts(manifest: &RunManifest) {
    for v in &manifest.verdicts {
        let mark = if v.matches_expected { "ok" } else { "MISMATCH" };
        println!(
            "{}/{}: {} (expected {}) {mark}",
            manifest.experiment, v.label, v.verdict, v.expected_verdict
        );
    }
    for e in &manifest.errors {
        eprintln!("error in {} replicate {:?}: {}", e.diagnostic, e.replicate, e.message);
    }
}

fn exit(all_matched: bool) -> ExitCode {
    if all_matched {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main_inner() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(common) => {
            let config = load(&common)?;
            let manifest = run::simulate(&config, common.jobs)?;
            println!("wrote {} files to {}", manifest.files.len(), config.output_dir.display());
            Ok(exit(manifest.errors.is_empty()))
        }
        Command::Diagnose(common) => {
            let config = load(&common)?;
            let manifest = run::run(&config, common.jobs)?;
            print_verdicts(&manifest);
            Ok(exit(manifest.all_matched))
        }
        Command::Fractal { common, replicates } => {
            let config = match &common.config {
                Some(_) => load(&common)?,
                None => {
                    let shipped = suite::default_configs()?
                        .into_iter()
                        .find(|c| c.id == "singular")
                        .context("shipped singular config missing")?;
                    apply(shipped.with_output_dir(PathBuf::from("out/fractal")), &common)
                }
            };
            let mut config = config.retain_diagnostics(|d| {
                matches!(
                    d,
                    Diagnostic::SureBounds(_)
                        | Diagnostic::CoverDimension(_)
                        | Diagnostic::CoverMass(_)
                        | Diagnostic::FdDensity(_)
                )
            });
            if let Some(r) = replicates {
                config = config.with_replicates(r)?;
            }
            if config.diagnostics.is_empty() {
                bail!("config {} has no fractal diagnostics", config.id);
            }
            let manifest = run::run(&config, common.jobs)?;
            print_verdicts(&manifest);
            Ok(exit(manifest.all_matched))
        }
        Command::Report { manifests, out } => {
            let rows = report::report(&manifests);
            print!("{}", report::to_table(&rows));
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("report.csv"), report::to_csv(&rows))?;
                std::fs::write(dir.join("report.txt"), report::to_table(&rows))?;
            }
            let complete = rows.iter().all(|r| r.verdict != report::INCOMPLETE);
            Ok(exit(complete))
        }
        Command::Suite { seed, out, jobs } => {
            let outcome = suite::run_suite(&out, seed, jobs)?;
            for m in &outcome.manifests {
                print_verdicts(m);
            }
            println!();
            print!("{}", report::to_table(&outcome.rows));
            Ok(exit(outcome.all_matched))
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
