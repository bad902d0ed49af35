//! Batch driver for the simulation experiments.

pub mod config;
pub mod experiments;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use oam_photonics::reference::reference_suite;
use oam_photonics::EfficiencyChain;

pub use config::ExperimentConfig;
pub use experiments::{run_experiment, RunOptions};
pub use output::{Artifact, Format};

/// Tags core errors with the module they come from.
pub trait Provenance<T> {
    fn provenance(self) -> Result<T>;
}

impl<T> Provenance<T> for oam_photonics::Result<T> {
    fn provenance(self) -> Result<T> {
        self.map_err(|e| anyhow!("[{}] {e}", e.module()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "oamsim", version, about = "Run hybrid OAM/polarization photonic experiments from a config file")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Experiment config (TOML); for `reference`, an optional budget chain.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for sampled runs; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Use expectation values instead of Poisson samples.
    #[arg(long, global = true)]
    pub exact_probabilities: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Run the experiment in --config (the default).
    Run,
    /// Check every golden value and print one line per check.
    Reference,
}

#[derive(Debug)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub success: bool,
}

impl Cli {
    fn options(&self) -> RunOptions {
        RunOptions { seed: self.seed, format: self.format, exact: self.exact_probabilities }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    artifacts
        .iter()
        .map(|a| {
            let p = dir.join(&a.name);
            fs::write(&p, &a.contents).with_context(|| format!("writing {}", p.display()))?;
            Ok(p)
        })
        .collect()
}

/// Parses and runs a config held in memory.
pub fn run_config_text(text: &str, opts: &RunOptions) -> Result<Vec<Artifact>> {
    let cfg = ExperimentConfig::parse(text)?;
    experiments::validate(&cfg)?;
    run_experiment(&cfg, opts)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match cli.command.unwrap_or(Command::Run) {
        Command::Run => {
            let path = cli.config.as_deref().context("--config is required")?;
            let out = cli.out.as_deref().context("--out is required")?;
            let artifacts = run_config_text(&read(path)?, &cli.options())
                .with_context(|| format!("running {}", path.display()))?;
            let written = write_artifacts(out, &artifacts)?;
            let lines = written.iter().map(|p| format!("wrote {}", p.display())).collect();
            Ok(Outcome { written, lines, success: true })
        }
        Command::Reference => {
            let chain = match &cli.config {
                Some(p) => EfficiencyChain::parse(&read(p)?).provenance()?,
                None => EfficiencyChain::nominal(),
            };
            let report = reference_suite(&chain).provenance()?;
            let mut lines: Vec<String> = report.checks.iter().map(|c| c.line()).collect();
            lines.push(format!("{} passed, {} failed", report.passed, report.failed));
            let written = match &cli.out {
                Some(dir) => write_artifacts(dir, &[experiments::reference_artifact(&report, cli.format)?])?,
                None => vec![],
            };
            Ok(Outcome { written, lines, success: report.all_pass() })
        }
    }
}
