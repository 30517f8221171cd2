use std::cell::RefCell;

use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::rfsignal::{mean_power, Complex64, Observation, MIN_OBSERVATION_LEN};

pub const FEATURE_DIM: usize = 15;
const MAX_LAG: usize = 8;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "mean_power",
    "power_variance",
    "moment2",
    "moment4",
    "moment6",
    "amplitude_kurtosis",
    "spectral_flatness",
    "autocorr1",
    "autocorr2",
    "autocorr3",
    "autocorr4",
    "autocorr5",
    "autocorr6",
    "autocorr7",
    "autocorr8",
];

/// Fixed summary statistics of one observation, in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Everything except the raw mean power is computed on the observation
/// scaled to unit power. Autocorrelations are normalized by the lag-0 value.
pub fn extract_features(obs: &Observation) -> Result<FeatureVector> {
    let len = obs.samples.len();
    if len < MIN_OBSERVATION_LEN {
        return Err(Error::invalid(format!(
            "observation has {len} samples; at least {MIN_OBSERVATION_LEN} are required"
        )));
    }
    if !obs.is_finite() {
        return Err(Error::NonFinite("observation samples"));
    }
    let power = mean_power(&obs.samples);
    if power == 0.0 {
        return Err(Error::degenerate("observation is identically zero"));
    }
    let scale = power.sqrt().recip();
    let y: Vec<Complex64> = obs.samples.iter().map(|s| s * scale).collect();
    let n = len as f64;

    let energy: Vec<f64> = y.iter().map(|s| s.norm_sqr()).collect();
    let energy_mean = energy.iter().sum::<f64>() / n;
    let power_variance = energy.iter().map(|e| (e - energy_mean).powi(2)).sum::<f64>() / n;

    let (mut m2, mut m4, mut m6) = (Complex64::default(), Complex64::default(), Complex64::default());
    for s in &y {
        let s2 = s * s;
        let s4 = s2 * s2;
        m2 += s2;
        m4 += s4;
        m6 += s4 * s2;
    }

    let amp: Vec<f64> = energy.iter().map(|e| e.sqrt()).collect();
    let amp_mean = amp.iter().sum::<f64>() / n;
    let amp_var = amp.iter().map(|a| (a - amp_mean).powi(2)).sum::<f64>() / n;
    let amp_m4 = amp.iter().map(|a| (a - amp_mean).powi(4)).sum::<f64>() / n;
    let kurtosis = if amp_var > 1e-12 { amp_m4 / (amp_var * amp_var) } else { 0.0 };

    let mut spectrum = y.clone();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len).process(&mut spectrum));
    let psd: Vec<f64> = spectrum.iter().map(|s| s.norm_sqr()).collect();
    let psd_mean = psd.iter().sum::<f64>() / n;
    let floor = psd_mean * 1e-12;
    let log_mean = psd.iter().map(|p| (p + floor).ln()).sum::<f64>() / n;
    let flatness = (log_mean.exp() / (psd_mean + floor)).min(1.0);

    let lag0: f64 = energy.iter().sum();
    let mut f = [0.0; FEATURE_DIM];
    f[0] = power;
    f[1] = power_variance;
    f[2] = m2.norm() / n;
    f[3] = m4.norm() / n;
    f[4] = m6.norm() / n;
    f[5] = kurtosis;
    f[6] = flatness;
    for lag in 1..=MAX_LAG {
        let r: Complex64 = y[lag..].iter().zip(&y).map(|(a, b)| a * b.conj()).sum();
        f[6 + lag] = r.norm() / lag0;
    }
    Ok(FeatureVector(f))
}

/// Features for every observation, in input order.
pub fn extract_all(observations: &[Observation]) -> Result<Vec<FeatureVector>> {
    observations.par_iter().map(extract_features).collect()
}
