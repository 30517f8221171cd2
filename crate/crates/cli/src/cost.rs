use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// 365.25 days.
pub const JULIAN_YEAR_SECONDS: f64 = 31_557_600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostAssumptions {
    pub sample_rate_hz: f64,
    pub obs_len: f64,
    pub n_classes: f64,
    pub bytes_per_sample: f64,
}

/// Time and storage for a sequential collection of `opc` observations per
/// class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub opc: f64,
    pub total_samples: f64,
    pub seconds: f64,
    pub years: f64,
    pub storage_bytes: f64,
    pub storage_tb: f64,
    pub assumptions: CostAssumptions,
}

pub fn cost_estimate(opc: f64, assumptions: CostAssumptions) -> CliResult<CostEstimate> {
    let CostAssumptions {
        sample_rate_hz,
        obs_len,
        n_classes,
        bytes_per_sample,
    } = assumptions;
    for (name, v) in [
        ("opc", opc),
        ("sample_rate_hz", sample_rate_hz),
        ("obs_len", obs_len),
        ("n_classes", n_classes),
        ("bytes_per_sample", bytes_per_sample),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::validation(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let total_samples = opc * n_classes * obs_len;
    let seconds = total_samples / sample_rate_hz;
    let storage_bytes = total_samples * bytes_per_sample;
    Ok(CostEstimate {
        opc,
        total_samples,
        seconds,
        years: seconds / JULIAN_YEAR_SECONDS,
        storage_bytes,
        storage_tb: storage_bytes / 1e12,
        assumptions,
    })
}
