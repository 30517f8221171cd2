use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    add_awgn, apply_freq_offset, apply_iqi, apply_srm, apply_static_channel, modulate,
    ModulationScheme, Observation, PulseShape, MIN_OBSERVATION_LEN, SRM_RANGE,
};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};

const SYNTH_STREAM: u64 = 0x5359_4E54;
const AUGMENT_STREAM: u64 = 0x4155_474D;

/// Closed interval `[lo, hi]` sampled uniformly; a zero-width interval always
/// yields `lo`. Serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformRange(pub f64, pub f64);

impl UniformRange {
    pub fn fixed(v: f64) -> Self {
        Self(v, v)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.0 == self.1 {
            self.0
        } else {
            rng.random_range(self.0..=self.1)
        }
    }

    fn check(&self, name: &str, lo: f64, hi: f64) -> Result<()> {
        let ok = self.0.is_finite() && self.1.is_finite() && self.0 <= self.1 && self.0 >= lo && self.1 <= hi;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{name} range [{}, {}] must be ordered and within [{lo}, {hi}]",
                self.0, self.1
            )))
        }
    }
}

fn one() -> UniformRange {
    UniformRange::fixed(1.0)
}

fn zero() -> UniformRange {
    UniformRange::fixed(0.0)
}

/// Per-observation impairment distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentRanges {
    /// `None` synthesizes noiseless observations.
    #[serde(default)]
    pub snr_db: Option<UniformRange>,
    #[serde(default = "zero")]
    pub freq_offset: UniformRange,
    #[serde(default = "one")]
    pub srm: UniformRange,
    #[serde(default = "one")]
    pub g_tx: UniformRange,
    #[serde(default = "one")]
    pub g_rx: UniformRange,
    #[serde(default = "zero")]
    pub phi_tx: UniformRange,
    #[serde(default = "zero")]
    pub phi_rx: UniformRange,
    #[serde(default = "one")]
    pub gain: UniformRange,
    #[serde(default = "zero")]
    pub phase: UniformRange,
    #[serde(default)]
    pub max_delay_samples: u32,
}

impl Default for ImpairmentRanges {
    fn default() -> Self {
        Self {
            snr_db: None,
            freq_offset: zero(),
            srm: one(),
            g_tx: one(),
            g_rx: one(),
            phi_tx: zero(),
            phi_rx: zero(),
            gain: one(),
            phase: zero(),
            max_delay_samples: 0,
        }
    }
}

impl ImpairmentRanges {
    pub fn validate(&self) -> Result<()> {
        use std::f64::consts::PI;
        if let Some(snr) = &self.snr_db {
            snr.check("snr_db", -50.0, 100.0)?;
        }
        self.freq_offset.check("freq_offset", -0.5, 0.5)?;
        self.srm.check("srm", SRM_RANGE.0, SRM_RANGE.1)?;
        self.g_tx.check("g_tx", 0.5, 2.0)?;
        self.g_rx.check("g_rx", 0.5, 2.0)?;
        self.phi_tx.check("phi_tx", -PI, PI)?;
        self.phi_rx.check("phi_rx", -PI, PI)?;
        self.gain.check("gain", f64::MIN_POSITIVE, f64::MAX)?;
        self.phase.check("phase", -PI, PI)?;
        Ok(())
    }
}

/// Synthetic dataset description: classes are the listed schemes in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub schemes: Vec<ModulationScheme>,
    pub per_class: usize,
    pub n_symbols: usize,
    pub sps: usize,
    pub pulse: PulseShape,
    #[serde(default)]
    pub impairments: ImpairmentRanges,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::invalid("schemes: at least one modulation scheme is required"));
        }
        if self.schemes.len() > u16::MAX as usize {
            return Err(Error::invalid("schemes: too many classes"));
        }
        if self.sps == 0 || self.n_symbols == 0 {
            return Err(Error::invalid("n_symbols and sps must be positive"));
        }
        self.impairments.validate()?;
        let shortest = (self.n_symbols * self.sps) as f64 * self.impairments.srm.0;
        if (shortest.floor() as usize) < MIN_OBSERVATION_LEN {
            return Err(Error::invalid(format!(
                "observations can shrink to {} samples; at least {MIN_OBSERVATION_LEN} are required",
                shortest.floor()
            )));
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.schemes.len()
    }
}

fn synth_one(config: &SynthConfig, index: usize, seed: u64) -> Result<Observation> {
    let class = index / config.per_class;
    let mut rng: StreamRng = stream_rng(seed, &[SYNTH_STREAM, index as u64]);
    let imp = &config.impairments;
    let obs = modulate(
        config.schemes[class],
        config.n_symbols,
        config.sps,
        config.pulse,
        class as u16,
        &mut rng,
    )?;
    let gain = imp.gain.sample(&mut rng);
    let phase = imp.phase.sample(&mut rng);
    let delay = if imp.max_delay_samples > 0 {
        rng.random_range(0..=imp.max_delay_samples)
    } else {
        0
    };
    let obs = apply_static_channel(obs, gain, phase, delay);
    let (g_tx, g_rx) = (imp.g_tx.sample(&mut rng), imp.g_rx.sample(&mut rng));
    let (phi_tx, phi_rx) = (imp.phi_tx.sample(&mut rng), imp.phi_rx.sample(&mut rng));
    let obs = apply_iqi(obs, g_tx, g_rx, phi_tx, phi_rx);
    let obs = apply_freq_offset(obs, imp.freq_offset.sample(&mut rng));
    let mut obs = apply_srm(obs, imp.srm.sample(&mut rng))?;
    super::scale_to_power(&mut obs.samples, 1.0);
    let snr = match &imp.snr_db {
        Some(r) => r.sample(&mut rng),
        None => f64::INFINITY,
    };
    Ok(add_awgn(obs, snr, &mut rng))
}

/// Draws `per_class` observations for every scheme, class-major. Observation
/// `i` uses its own random stream, so the result does not depend on the
/// thread count.
pub fn synth_dataset(config: &SynthConfig, seed: u64) -> Result<Vec<Observation>> {
    config.validate()?;
    let total = config.per_class * config.n_classes();
    (0..total)
        .into_par_iter()
        .map(|i| synth_one(config, i, seed))
        .collect()
}

/// Fresh SNR/FO/SRM perturbations applied on top of stored observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub n_augments: usize,
    /// `None` adds no noise.
    #[serde(default)]
    pub snr_db: Option<UniformRange>,
    #[serde(default = "zero")]
    pub freq_offset: UniformRange,
    #[serde(default = "one")]
    pub srm: UniformRange,
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(snr) = &self.snr_db {
            snr.check("snr_db", -50.0, 100.0)?;
        }
        self.freq_offset.check("freq_offset", -0.5, 0.5)?;
        self.srm.check("srm", SRM_RANGE.0, SRM_RANGE.1)
    }
}

/// `n_augments` perturbed copies of every base observation, base-major. IQ
/// imbalance is not re-applied; each copy records its base index.
pub fn augment_dataset(base: &[Observation], config: &AugmentConfig, seed: u64) -> Result<Vec<Observation>> {
    if base.is_empty() {
        return Err(Error::invalid("cannot augment an empty dataset"));
    }
    config.validate()?;
    let total = base.len() * config.n_augments;
    (0..total)
        .into_par_iter()
        .map(|j| {
            let (i, a) = (j / config.n_augments, j % config.n_augments);
            let mut rng = stream_rng(seed, &[AUGMENT_STREAM, i as u64, a as u64]);
            let obs = apply_freq_offset(base[i].clone(), config.freq_offset.sample(&mut rng));
            let obs = apply_srm(obs, config.srm.sample(&mut rng))?;
            let snr = match &config.snr_db {
                Some(r) => r.sample(&mut rng),
                None => f64::INFINITY,
            };
            let mut obs = add_awgn(obs, snr, &mut rng);
            obs.source_index = Some(i as u32);
            Ok(obs)
        })
        .collect()
}
