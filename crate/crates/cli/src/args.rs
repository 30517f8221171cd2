use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "dataneeds", version, about = "Estimate how much training data a classifier needs")]
pub struct Cli {
    /// Worker threads; defaults to one per core. Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize training and evaluation datasets.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate one model per (quantity, trial).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the manifest's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the metrics of one score file as JSON.
    Metrics { file: PathBuf },
    /// Fit the sweep and predict the quantity needed for near-perfect metrics.
    Predict {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Overrides the whitening seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Collection time and storage for a given observations-per-class.
    Cost {
        #[arg(long)]
        opc: f64,
        #[arg(long)]
        classes: f64,
        #[arg(long)]
        obs_len: f64,
        #[arg(long, default_value_t = 1e4)]
        sample_rate: f64,
        #[arg(long)]
        bytes_per_sample: f64,
    },
}
