use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Complex64, Observation};

/// Adds circularly-symmetric complex Gaussian noise with per-sample variance
/// `10^(−snr_db/10)`, i.e. the given SNR against a unit-power signal. An
/// infinite SNR leaves the samples untouched.
pub fn add_awgn<R: Rng + ?Sized>(mut obs: Observation, snr_db: f64, rng: &mut R) -> Observation {
    if snr_db == f64::INFINITY {
        return obs;
    }
    let std_per_component = (0.5 * 10f64.powf(-snr_db / 10.0)).sqrt();
    for s in obs.samples.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex64::new(re, im) * std_per_component;
    }
    obs.meta.snr_db = combine_snr_db(obs.meta.snr_db, snr_db);
    obs
}

/// SNR after adding independent noise at `added` dB to a signal already at
/// `existing` dB.
fn combine_snr_db(existing: f64, added: f64) -> f64 {
    if existing == f64::INFINITY {
        return added;
    }
    -10.0 * (10f64.powf(-existing / 10.0) + 10f64.powf(-added / 10.0)).log10()
}

/// Rotates sample `n` by `exp(j2π·freq_offset·n)`.
pub fn apply_freq_offset(mut obs: Observation, freq_offset: f64) -> Observation {
    if freq_offset != 0.0 {
        for (n, s) in obs.samples.iter_mut().enumerate() {
            let (sin, cos) = (2.0 * PI * freq_offset * n as f64).sin_cos();
            *s *= Complex64::new(cos, sin);
        }
    }
    obs.meta.freq_offset += freq_offset;
    obs
}

/// Additive IQ-imbalance interference for transmitter/receiver gain ratios
/// `g` and quadrature phase errors `φ`:
///
/// `x_re·(−j g_rx sin φ_rx) + x_im·(−g_tx sin φ_tx + j(g_tx g_rx cos(φ_tx − φ_rx) − 1))`
pub fn iqi_term(x: Complex64, g_tx: f64, g_rx: f64, phi_tx: f64, phi_rx: f64) -> Complex64 {
    let re = x.im * (-g_tx * phi_tx.sin());
    let im = x.re * (-g_rx * phi_rx.sin()) + x.im * (g_tx * g_rx * (phi_tx - phi_rx).cos() - 1.0);
    Complex64::new(re, im)
}

/// `r = s + IQI(s, g_tx, g_rx, φ_tx, φ_rx)` elementwise.
pub fn apply_iqi(mut obs: Observation, g_tx: f64, g_rx: f64, phi_tx: f64, phi_rx: f64) -> Observation {
    for s in obs.samples.iter_mut() {
        *s += iqi_term(*s, g_tx, g_rx, phi_tx, phi_rx);
    }
    obs.meta.g_tx = g_tx;
    obs.meta.g_rx = g_rx;
    obs.meta.phi_tx = phi_tx;
    obs.meta.phi_rx = phi_rx;
    obs
}

/// Static gain, phase rotation and integer delay (zeros shifted in, length
/// preserved).
pub fn apply_static_channel(mut obs: Observation, gain: f64, phase: f64, delay_samples: u32) -> Observation {
    let rotation = Complex64::from_polar(gain, phase);
    if rotation != Complex64::new(1.0, 0.0) {
        obs.samples.iter_mut().for_each(|s| *s *= rotation);
    }
    let delay = (delay_samples as usize).min(obs.samples.len());
    if delay > 0 {
        obs.samples.rotate_right(delay);
        obs.samples[..delay].fill(Complex64::new(0.0, 0.0));
    }
    obs.meta.gain = gain;
    obs.meta.phase = phase;
    obs.meta.delay_samples = delay_samples;
    obs
}
