//! Pipeline driver: synthesize → sweep → predict, plus single-file metrics
//! and the collection-cost calculator.

pub mod args;
pub mod cost;
pub mod error;
pub mod files;
pub mod metrics;
pub mod predict;
pub mod sweep;
pub mod synth;

use serde::{Deserialize, Serialize};

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

/// Version of the JSON files written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// Identifies the producing tool in every JSON output. Deliberately free of
/// timestamps and host details so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub version: String,
}

impl Generator {
    pub fn current() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Synth { config, seed, out } => {
            let manifest = synth::cmd_synth(&config, seed, &out)?;
            for f in &manifest.files {
                println!("{}: {} records", out.join(&f.path).display(), f.records);
            }
        }
        Command::Sweep { config, seed, out } => {
            let index = sweep::cmd_sweep(&config, seed, &out)?;
            let failed = index.entries.iter().filter(|e| e.status == sweep::RunStatus::Failed).count();
            println!(
                "{}: {} runs, {failed} failed",
                out.join(sweep::INDEX_FILE).display(),
                index.entries.len()
            );
        }
        Command::Metrics { file } => {
            let summary = metrics::cmd_metrics(&file)?;
            print!("{}", files::to_json_string(&summary)?);
        }
        Command::Predict {
            index,
            out,
            epsilon,
            iterations,
            seed,
        } => {
            let options = predict::PredictOptions {
                epsilon,
                iterations,
                seed,
            };
            let report = predict::cmd_predict(&index, options, &out)?;
            println!("{}", out.join(predict::REPORT_FILE).display());
            if let Some(p) = report.preferred {
                println!("preferred metric {}: {:?} observations per class", p.metric, p.quantity);
            }
        }
        Command::Cost {
            opc,
            classes,
            obs_len,
            sample_rate,
            bytes_per_sample,
        } => {
            let estimate = cost::cost_estimate(
                opc,
                cost::CostAssumptions {
                    sample_rate_hz: sample_rate,
                    obs_len,
                    n_classes: classes,
                    bytes_per_sample,
                },
            )?;
            print!("{}", files::to_json_string(&estimate)?);
        }
    }
    Ok(())
}

/// Runs one parsed invocation, on a dedicated pool when `--jobs` is given.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.jobs {
        Some(0) => Err(CliError::validation("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.into()))?
            .install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    }
}
