//! Command-line front end for the MRSA chain-binomial model: dataset and
//! config loading, the `simulate`, `fit`, `compare`, `ppc` and `report`
//! commands, and their artifact formats.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{load_config, Overrides, RunConfig, OUT_DIR_ENV};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "mrsa", version, about = "Chain-binomial MRSA transmission model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset CSV.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [env: MRSA_OUT_DIR].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Model id 1..15, a comma-separated list, or `all`.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Prior preset 1, 2 or 3, `all`, or a TOML file of gamma priors.
    #[arg(long, global = true)]
    pub prior: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a synthetic dataset and its full trajectory.
    Simulate,
    /// Fit one model and summarize the posterior.
    Fit,
    /// Fit and rank models by WAIC.
    Compare,
    /// Posterior predictive bands and prediction error.
    Ppc {
        /// Trace CSV; defaults to trace.csv in the output directory.
        #[arg(long)]
        chain: Option<PathBuf>,
    },
    /// Collate the artifacts of a directory into report.md.
    Report {
        /// Defaults to the output directory.
        dir: Option<PathBuf>,
    },
}

impl Cli {
    pub fn run_config(&self, out_env: Option<PathBuf>) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        let overrides = Overrides {
            data: self.data.clone(),
            seed: self.seed,
            out: self.out.clone(),
            model: self.model.clone(),
            prior: self.prior.clone(),
        };
        cfg.apply(&overrides, out_env)?;
        Ok(cfg)
    }

    /// Runs the command and returns the text to print.
    pub fn execute(&self, out_env: Option<PathBuf>) -> Result<String> {
        let cfg = self.run_config(out_env)?;
        match &self.command {
            Command::Simulate => commands::simulate(&cfg),
            Command::Fit => commands::fit(&cfg),
            Command::Compare => commands::compare(&cfg),
            Command::Ppc { chain } => commands::ppc(&cfg, chain.as_deref()),
            Command::Report { dir } => commands::report(dir.as_deref().unwrap_or(&cfg.out)),
        }
    }
}

/// Parses `args` and runs; the output directory falls back to `MRSA_OUT_DIR`.
pub fn run<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::validation(e.to_string()))?;
    cli.execute(std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
}
