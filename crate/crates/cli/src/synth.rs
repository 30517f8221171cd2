use std::path::Path;

use dataneeds::rfsignal::{augment_dataset, synth_dataset, write_dataset, AugmentConfig, SynthConfig};
use dataneeds::rng::stream_id;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::files::{read_json, sha256_hex, write_bytes, write_json};
use crate::{Generator, SCHEMA_VERSION};

const EVAL_KEY: u64 = 0x4556_414C;
const AUGMENT_KEY: u64 = 0x4155_4731;

pub const TRAIN_FILE: &str = "train.bin";
pub const EVAL_FILE: &str = "eval.bin";
pub const DATASET_MANIFEST: &str = "dataset.json";

/// Input of `synth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthFile {
    pub problem_id: String,
    pub dataset: SynthConfig,
    /// Held-out observations per class drawn from the same distribution.
    #[serde(default)]
    pub eval_per_class: usize,
    /// Perturbed copies appended to the training set.
    #[serde(default)]
    pub augment: Option<AugmentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub role: String,
    pub path: String,
    pub records: usize,
    pub sha256: String,
}

/// Written next to the dataset containers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub generator: Generator,
    pub problem_id: String,
    pub seed: u64,
    pub n_classes: usize,
    pub class_names: Vec<String>,
    pub files: Vec<DatasetFile>,
    pub config: SynthFile,
}

fn encode(observations: &[dataneeds::rfsignal::Observation]) -> CliResult<Vec<u8>> {
    let mut bytes = Vec::new();
    write_dataset(&mut bytes, observations)?;
    Ok(bytes)
}

pub fn cmd_synth(config_path: &Path, seed: u64, out: &Path) -> CliResult<DatasetManifest> {
    let config: SynthFile = read_json(config_path)?;
    config.dataset.validate().map_err(|e| CliError::from(e).at(config_path))?;
    if let Some(aug) = &config.augment {
        aug.validate().map_err(|e| CliError::from(e).at(config_path))?;
    }

    let mut train = synth_dataset(&config.dataset, seed)?;
    if let Some(aug) = &config.augment {
        if aug.n_augments > 0 && !train.is_empty() {
            let extra = augment_dataset(&train, aug, stream_id(&[seed, AUGMENT_KEY]))?;
            train.extend(extra);
        }
    }
    let mut outputs = vec![(TRAIN_FILE, "train", encode(&train)?, train.len())];
    if config.eval_per_class > 0 {
        let eval_config = SynthConfig {
            per_class: config.eval_per_class,
            ..config.dataset.clone()
        };
        let eval = synth_dataset(&eval_config, stream_id(&[seed, EVAL_KEY]))?;
        outputs.push((EVAL_FILE, "eval", encode(&eval)?, eval.len()));
    }

    let mut files = Vec::new();
    for (name, role, bytes, records) in outputs {
        write_bytes(&out.join(name), &bytes)?;
        files.push(DatasetFile {
            role: role.to_string(),
            path: name.to_string(),
            records,
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = DatasetManifest {
        schema_version: SCHEMA_VERSION,
        generator: Generator::current(),
        problem_id: config.problem_id.clone(),
        seed,
        n_classes: config.dataset.n_classes(),
        class_names: config.dataset.schemes.iter().map(|s| s.to_string()).collect(),
        files,
        config,
    };
    write_json(&out.join(DATASET_MANIFEST), &manifest)?;
    Ok(manifest)
}
