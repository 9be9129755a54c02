//! `cfuse`: train, apply and evaluate late-fusion multi-view classifiers
//! from CSV feature files.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::commands::GenSpec;
use crate::config::RunConfig;
pub use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "cfuse", version, about = "Late-fusion multi-view classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed override for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an ensemble on the [train] data and write the model file.
    Train {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Model file; overrides [output] model.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Predict the [test] data with a trained model.
    Predict {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Model file; overrides [output] model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Predictions file; overrides [output] predictions.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a predictions file against a labels file.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        /// Labels file, `sample_id,label`.
        #[arg(long)]
        labels: PathBuf,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy per group subset and strategy.
    Ablate {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Report file; overrides [output] report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy of the five fusion strategies.
    Compare {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Report file; overrides [output] report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset (the default benchmark without --config).
    GenData {
        /// Generator recipe (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run_config(path: &Path, seed: Option<u64>) -> CliResult<RunConfig> {
    Ok(RunConfig::load(path)?.with_seed(seed))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // fails only if a pool already exists, which keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Train { config, model } => commands::cmd_train(&run_config(config, cli.seed)?, model.as_deref(), out),
        Command::Predict { config, model, out: dest } => {
            commands::cmd_predict(&run_config(config, cli.seed)?, model.as_deref(), dest.as_deref(), out)
        }
        Command::Evaluate { predictions, labels, out: dest } => commands::cmd_evaluate(predictions, labels, dest.as_deref(), out),
        Command::Ablate { config, out: dest } => commands::cmd_ablate(&run_config(config, cli.seed)?, dest.as_deref(), out),
        Command::Compare { config, out: dest } => commands::cmd_compare(&run_config(config, cli.seed)?, dest.as_deref(), out),
        Command::GenData { config, out: dir } => {
            let mut spec = match config {
                Some(p) => GenSpec::load(p)?,
                None => GenSpec::benchmark(0),
            };
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            commands::cmd_gendata(&spec, dir, out)
        }
    }
}
