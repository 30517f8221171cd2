//! Complex-baseband modulation and channel impairments.
//!
//! Samples are `Complex64` with unit average power before noise. The synthetic
//! chain applied per observation is
//! modulate → static channel → IQ imbalance → frequency offset → sample-rate
//! mismatch → AWGN.

mod container;
mod dataset;
mod impairments;
mod modulation;
mod resample;

pub use container::{read_dataset, write_dataset, HEADER_PARAMS, RECORD_HEADER_BYTES};
pub use dataset::{augment_dataset, synth_dataset, AugmentConfig, ImpairmentRanges, SynthConfig, UniformRange};
pub use impairments::{add_awgn, apply_freq_offset, apply_iqi, apply_static_channel, iqi_term};
pub use modulation::{modulate, ModulationScheme, PulseShape};
pub use resample::{apply_srm, resample, SincResampler, KAISER_BETA, SRM_RANGE, TAPS_PER_PHASE};

pub use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Minimum observation length accepted by feature extraction and synthesis.
pub const MIN_OBSERVATION_LEN: usize = 64;

/// Channel and impairment parameters applied to an observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// `+∞` when no noise has been added.
    pub snr_db: f64,
    /// Cycles per sample.
    pub freq_offset: f64,
    /// Resampling ratio, output rate over input rate.
    pub srm: f64,
    pub g_tx: f64,
    pub g_rx: f64,
    /// Radians.
    pub phi_tx: f64,
    pub phi_rx: f64,
    pub gain: f64,
    pub phase: f64,
    pub delay_samples: u32,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            snr_db: f64::INFINITY,
            freq_offset: 0.0,
            srm: 1.0,
            g_tx: 1.0,
            g_rx: 1.0,
            phi_tx: 0.0,
            phi_rx: 0.0,
            gain: 1.0,
            phase: 0.0,
            delay_samples: 0,
        }
    }
}

impl ChannelParams {
    /// The nine floating-point fields in container order.
    pub fn to_header(&self) -> [f64; HEADER_PARAMS] {
        [
            self.snr_db,
            self.freq_offset,
            self.srm,
            self.g_tx,
            self.g_rx,
            self.phi_tx,
            self.phi_rx,
            self.gain,
            self.phase,
        ]
    }

    pub fn from_header(h: [f64; HEADER_PARAMS]) -> Self {
        Self {
            snr_db: h[0],
            freq_offset: h[1],
            srm: h[2],
            g_tx: h[3],
            g_rx: h[4],
            phi_tx: h[5],
            phi_rx: h[6],
            gain: h[7],
            phase: h[8],
            delay_samples: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub samples: Vec<Complex64>,
    pub label: u16,
    pub meta: ChannelParams,
    /// Index of the base observation this one was augmented from.
    pub source_index: Option<u32>,
}

impl Observation {
    pub fn new(samples: Vec<Complex64>, label: u16) -> Self {
        Self {
            samples,
            label,
            meta: ChannelParams::default(),
            source_index: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|s| s.re.is_finite() && s.im.is_finite())
    }
}

/// Mean of `|x|²`.
pub fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

pub(crate) fn scale_to_power(samples: &mut [Complex64], target: f64) {
    let power = mean_power(samples);
    if power > 0.0 {
        let k = (target / power).sqrt();
        samples.iter_mut().for_each(|s| *s *= k);
    }
}
