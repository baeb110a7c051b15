//! `tricp`: reproducible experiments for triplet-embedding conformal
//! classification with a consensus feedback loop.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "tricp", version, about)]
struct Cli {
    /// TOML experiment manifest.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for all randomness (overrides the manifest).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; relative artifact paths resolve against it.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic splits and degrading sequences.
    GenData,
    /// Train the embedder on the proper-training split.
    Train,
    /// Score the calibration split and select epsilon on the validation split.
    Calibrate,
    /// Per-input p-values and prediction sets for a dataset file.
    Predict {
        /// Dataset file to classify.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Run the consensus loop over every sequence.
    Simulate {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        k_consecutive: Option<usize>,
    },
    /// Error rate, undecided rate and frames-to-decision over the epsilon and k grids.
    Sweep,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut overrides = Overrides {
        seed: cli.seed,
        out_dir: cli.out_dir,
        ..Default::default()
    };
    match &cli.command {
        Command::Predict { epsilon, .. } => overrides.epsilon = *epsilon,
        Command::Simulate { epsilon, k_consecutive } => {
            overrides.epsilon = *epsilon;
            overrides.k_consecutive = *k_consecutive;
        }
        _ => {}
    }
    let config = RunConfig::load(cli.config.as_deref(), overrides)?;
    let written = match &cli.command {
        Command::GenData => commands::gen_data(&config)?,
        Command::Train => commands::train(&config)?,
        Command::Calibrate => commands::calibrate_cmd(&config)?,
        Command::Predict { input, .. } => commands::predict(&config, input)?,
        Command::Simulate { .. } => commands::simulate(&config)?,
        Command::Sweep => commands::sweep(&config)?,
    };
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
