use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use dataneeds::classifier::{evaluate_features, train, write_logits, LabeledFeatures, TrainConfig};
use dataneeds::metrics::MetricVector;
use dataneeds::rfsignal::read_dataset;
use dataneeds::rng::stream_id;
use dataneeds::whitening::WhiteningConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::files::{buffered_reader, parent_dir, portable, read_bytes, read_json, resolve, sha256_hex, write_json};
use crate::{Generator, SCHEMA_VERSION};

pub const INDEX_FILE: &str = "index.json";
const RUNS_DIR: &str = "runs";

/// Optional whitening settings; unset fields take the library defaults for
/// the problem's class count, with the seed falling back to the master seed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhiteningOverrides {
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
}

impl WhiteningOverrides {
    pub fn resolve(&self, classes: usize, master_seed: u64) -> WhiteningConfig {
        let mut config = WhiteningConfig::for_classes(classes, self.seed.unwrap_or(master_seed));
        if let Some(g) = self.gamma {
            config.gamma = g;
        }
        if let Some(e) = self.epsilon {
            config.epsilon = e;
        }
        if let Some(i) = self.iterations {
            config.iterations = i;
        }
        config
    }
}

/// Input of `sweep`. Dataset paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub problem_id: String,
    pub train: PathBuf,
    pub eval: PathBuf,
    pub n_classes: usize,
    pub quantities: Vec<u64>,
    pub trials_per_quantity: u32,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub whitening: WhiteningOverrides,
    #[serde(default)]
    pub classifier: TrainConfig,
}

impl RunManifest {
    pub fn validate(&self) -> CliResult<()> {
        if self.quantities.is_empty() {
            return Err(CliError::validation("field `quantities`: at least one quantity is required"));
        }
        if self.quantities[0] == 0 || self.quantities.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::validation(
                "field `quantities`: values must be positive and strictly increasing",
            ));
        }
        if self.trials_per_quantity == 0 {
            return Err(CliError::validation("field `trials_per_quantity`: must be at least 1"));
        }
        if self.n_classes < 2 || self.n_classes > u16::MAX as usize {
            return Err(CliError::validation("field `n_classes`: must be at least 2"));
        }
        if !(self.classifier.learning_rate > 0.0 && self.classifier.learning_rate.is_finite()) {
            return Err(CliError::validation("field `classifier.learning_rate`: must be positive"));
        }
        self.whitening
            .resolve(self.n_classes, self.master_seed)
            .validate(self.n_classes)
            .map_err(|e| CliError::validation(format!("field `whitening`: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub quantity: u64,
    pub trial: u32,
    pub status: RunStatus,
    /// Score file relative to the index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Output of `sweep` and input of `predict`. Entries can equally point at
/// score files produced by an external model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepIndex {
    pub schema_version: u32,
    pub generator: Generator,
    pub problem_id: String,
    pub dataset_id: String,
    pub n_classes: usize,
    pub master_seed: u64,
    pub whitening: WhiteningConfig,
    pub classifier: TrainConfig,
    pub entries: Vec<SweepEntry>,
}

fn load_features(path: &Path, n_classes: usize) -> CliResult<(LabeledFeatures, Vec<u8>)> {
    let bytes = read_bytes(path)?;
    let observations = read_dataset(bytes.as_slice()).map_err(|e| CliError::from(e).at(path))?;
    if let Some(o) = observations.iter().find(|o| o.label as usize >= n_classes) {
        return Err(CliError::validation(format!(
            "{}: label {} out of range for n_classes = {n_classes}",
            path.display(),
            o.label
        )));
    }
    let features = LabeledFeatures::from_observations(&observations, n_classes).map_err(|e| CliError::from(e).at(path))?;
    Ok((features, bytes))
}

/// Seed of trial `trial`. Every quantity of a trial shares it, so each
/// trial's training sets are nested prefixes of one per-class shuffle.
pub fn trial_seed(master_seed: u64, trial: u32) -> u64 {
    stream_id(&[master_seed, trial as u64])
}

fn run_file(quantity: u64, trial: u32) -> PathBuf {
    Path::new(RUNS_DIR).join(format!("q{quantity:07}_t{trial:02}.csv"))
}

fn run_one(
    manifest: &RunManifest,
    master_seed: u64,
    train_set: &LabeledFeatures,
    eval_set: &LabeledFeatures,
    out: &Path,
    quantity: u64,
    trial: u32,
) -> SweepEntry {
    let attempt = || -> CliResult<SweepEntry> {
        let model = train(train_set, quantity as usize, &manifest.classifier, trial_seed(master_seed, trial))?;
        let pred = evaluate_features(&model, eval_set)?;
        let metrics = MetricVector::compute(&pred)?;
        let mut bytes = Vec::new();
        write_logits(&mut bytes, &pred)?;
        let rel = run_file(quantity, trial);
        crate::files::write_bytes(&out.join(&rel), &bytes)?;
        Ok(SweepEntry {
            quantity,
            trial,
            status: RunStatus::Ok,
            path: Some(portable(&rel)),
            sha256: Some(sha256_hex(&bytes)),
            metrics: Some(metrics),
            error: None,
        })
    };
    attempt().unwrap_or_else(|e| SweepEntry {
        quantity,
        trial,
        status: RunStatus::Failed,
        path: None,
        sha256: None,
        metrics: None,
        error: Some(e.to_string()),
    })
}

pub fn cmd_sweep(manifest_path: &Path, seed: Option<u64>, out: &Path) -> CliResult<SweepIndex> {
    let manifest: RunManifest = read_json(manifest_path)?;
    manifest.validate().map_err(|e| e.at(manifest_path))?;
    let base = parent_dir(manifest_path);
    let train_path = resolve(&base, &manifest.train);
    let eval_path = resolve(&base, &manifest.eval);
    // Fail on missing inputs before any work is done.
    for p in [&train_path, &eval_path] {
        buffered_reader(p)?;
    }
    let master_seed = seed.unwrap_or(manifest.master_seed);
    let (train_set, train_bytes) = load_features(&train_path, manifest.n_classes)?;
    let (eval_set, _) = load_features(&eval_path, manifest.n_classes)?;
    if eval_set.is_empty() {
        return Err(CliError::validation(format!("{}: evaluation set is empty", eval_path.display())));
    }

    let runs: Vec<(u64, u32)> = manifest
        .quantities
        .iter()
        .flat_map(|&q| (0..manifest.trials_per_quantity).map(move |t| (q, t)))
        .collect();
    let entries: Vec<SweepEntry> = runs
        .par_iter()
        .map(|&(q, t)| run_one(&manifest, master_seed, &train_set, &eval_set, out, q, t))
        .collect();
    for e in entries.iter().filter(|e| e.status == RunStatus::Failed) {
        eprintln!(
            "warning: run q={} trial={} failed: {}",
            e.quantity,
            e.trial,
            e.error.as_deref().unwrap_or("")
        );
    }

    let index = SweepIndex {
        schema_version: SCHEMA_VERSION,
        generator: Generator::current(),
        problem_id: manifest.problem_id.clone(),
        dataset_id: sha256_hex(&train_bytes),
        n_classes: manifest.n_classes,
        master_seed,
        whitening: manifest.whitening.resolve(manifest.n_classes, master_seed),
        classifier: manifest.classifier,
        entries,
    };
    write_json(&out.join(INDEX_FILE), &index)?;
    Ok(index)
}

/// Distinct quantities among successful runs.
pub fn successful_quantities(index: &SweepIndex) -> BTreeSet<u64> {
    index
        .entries
        .iter()
        .filter(|e| e.status == RunStatus::Ok)
        .map(|e| e.quantity)
        .collect()
}
