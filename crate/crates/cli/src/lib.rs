//! The `causalcast` command-line pipeline.

pub mod commands;
pub mod config;
pub mod error;
pub mod schema;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Paths;
use crate::config::PipelineConfig;
pub use crate::error::{Category, CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "causalcast", version, about = "Causal feature discovery and GRU-LSTM sea-ice forecasting")]
pub struct Cli {
    /// Pipeline configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Restrict train/evaluate/forecast to one variant.
    #[arg(long, global = true, value_name = "NAME")]
    pub variant: Option<String>,
    /// Override the configured seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Impute, aggregate and normalize the input CSVs.
    Preprocess,
    /// Run causal discovery and write graphs and selected feature lists.
    Discover,
    /// Train one model per horizon for each variant.
    Train,
    /// Score checkpoints on the test period and write reports.
    Evaluate,
    /// Forecast from the most recent window.
    Forecast,
    /// Simulate the configured structural causal model.
    Synth,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => {
            let c = PipelineConfig::default();
            c.validate()?;
            c
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

/// Run one subcommand; returns the lines to print.
pub fn run(cli: &Cli) -> Result<Vec<String>> {
    let config = load_config(cli)?;
    if let Some(v) = &cli.variant {
        config.variant(v)?;
    }
    let paths = Paths::new(&config.output_dir);
    let variant = cli.variant.as_deref();
    match cli.command {
        Command::Preprocess => commands::preprocess(&config, &paths),
        Command::Discover => commands::discover(&config, &paths),
        Command::Train => commands::train(&config, &paths, variant),
        Command::Evaluate => commands::evaluate(&config, &paths, variant),
        Command::Forecast => commands::forecast(&config, &paths, variant),
        Command::Synth => commands::synth(&config, &paths, cli.seed),
    }
}
