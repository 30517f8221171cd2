use std::path::Path;

use dataneeds::classifier::read_logits;
use dataneeds::metrics::MetricVector;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::files::{read_bytes, sha256_hex};

/// Output of `metrics`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub sha256: String,
    pub kind: String,
    pub n: usize,
    pub n_classes: usize,
    #[serde(flatten)]
    pub metrics: MetricVector,
}

pub fn cmd_metrics(path: &Path) -> CliResult<MetricsSummary> {
    let bytes = read_bytes(path)?;
    let (kind, pred) = read_logits(bytes.as_slice()).map_err(|e| CliError::from(e).at(path))?;
    Ok(MetricsSummary {
        sha256: sha256_hex(&bytes),
        kind: kind.to_string(),
        n: pred.len(),
        n_classes: pred.n_classes(),
        metrics: MetricVector::compute(&pred)?,
    })
}
