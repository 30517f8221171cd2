//! Band-limited resampling with a Kaiser-windowed sinc kernel.
//!
//! The kernel is tabulated over [`PHASES`] fractional offsets and linearly
//! interpolated between neighbouring phases. When decimating, the cutoff is
//! lowered to the output Nyquist rate and the kernel widened to match, so the
//! filter always spans [`TAPS_PER_PHASE`] taps at the lower of the two rates.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use super::{mean_power, scale_to_power, Complex64, Observation};
use crate::error::{Error, Result};

pub const KAISER_BETA: f64 = 8.0;
pub const TAPS_PER_PHASE: usize = 32;
const PHASES: usize = 1024;
pub const SRM_RANGE: (f64, f64) = (0.5, 2.0);

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = 0.5 * x;
    for k in 1..200 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser window sampled on the phase grid, `(PHASES + 1) × 2·half_width`.
/// Only a handful of half-widths occur, so the tables are built once.
fn kaiser_table(half_width: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().unwrap().get(&half_width) {
        return Arc::clone(t);
    }
    let width = 2 * half_width;
    let norm = bessel_i0(KAISER_BETA);
    let mut table = Vec::with_capacity((PHASES + 1) * width);
    for p in 0..=PHASES {
        let frac = p as f64 / PHASES as f64;
        for i in 0..width {
            // Distance from the interpolation point to tap i.
            let d = frac + (half_width - 1) as f64 - i as f64;
            let u = d / half_width as f64;
            table.push(if u.abs() < 1.0 {
                bessel_i0(KAISER_BETA * (1.0 - u * u).sqrt()) / norm
            } else {
                0.0
            });
        }
    }
    let table = Arc::new(table);
    cache.lock().unwrap().insert(half_width, Arc::clone(&table));
    table
}

#[derive(Debug, Clone)]
pub struct SincResampler {
    ratio: f64,
    /// Taps on each side of the interpolation point, in input samples.
    half_width: usize,
    /// `(PHASES + 1) × 2·half_width` kernel values.
    table: Vec<f64>,
}

impl SincResampler {
    pub fn new(ratio: f64) -> Result<Self> {
        if !(ratio >= SRM_RANGE.0 && ratio <= SRM_RANGE.1) {
            return Err(Error::invalid(format!(
                "resampling ratio {ratio} outside [{}, {}]",
                SRM_RANGE.0, SRM_RANGE.1
            )));
        }
        let cutoff = ratio.min(1.0);
        let half_width = ((TAPS_PER_PHASE / 2) as f64 / cutoff).ceil() as usize;
        let width = 2 * half_width;
        let window = kaiser_table(half_width);
        // sin(π·c·d) along a phase row via a rotation recurrence: d drops by
        // one per tap, so each step multiplies by exp(−jπc).
        let step = Complex64::from_polar(1.0, -PI * cutoff);
        let mut table = Vec::with_capacity((PHASES + 1) * width);
        for p in 0..=PHASES {
            let frac = p as f64 / PHASES as f64;
            let d0 = frac + (half_width - 1) as f64;
            let mut rot = Complex64::from_polar(1.0, PI * cutoff * d0);
            for i in 0..width {
                let d = d0 - i as f64;
                let kernel = if d == 0.0 { cutoff } else { rot.im / (PI * d) };
                table.push(kernel * window[p * width + i]);
                rot *= step;
            }
        }
        Ok(Self {
            ratio,
            half_width,
            table,
        })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Resamples `input`; the output has `⌊len · ratio⌋` samples and sample
    /// `m` sits at input time `m / ratio`.
    pub fn process(&self, input: &[Complex64]) -> Vec<Complex64> {
        let out_len = (input.len() as f64 * self.ratio).floor() as usize;
        let width = 2 * self.half_width;
        let len = input.len() as isize;
        (0..out_len)
            .map(|m| {
                let t = m as f64 / self.ratio;
                let base = t.floor();
                let pos = (t - base) * PHASES as f64;
                let phase = (pos.floor() as usize).min(PHASES - 1);
                let mix = pos - phase as f64;
                let lo = &self.table[phase * width..(phase + 1) * width];
                let hi = &self.table[(phase + 1) * width..(phase + 2) * width];
                let first = base as isize - self.half_width as isize + 1;
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..width {
                    let n = first + i as isize;
                    if n < 0 || n >= len {
                        continue;
                    }
                    let h = if mix == 0.0 { lo[i] } else { lo[i] + mix * (hi[i] - lo[i]) };
                    acc += input[n as usize] * h;
                }
                acc
            })
            .collect()
    }
}

/// Resamples by `ratio` without any power correction.
pub fn resample(samples: &[Complex64], ratio: f64) -> Result<Vec<Complex64>> {
    Ok(SincResampler::new(ratio)?.process(samples))
}

/// Sample-rate mismatch: resample by `ratio` and restore the input's average
/// power (unit power in, unit power out).
pub fn apply_srm(mut obs: Observation, ratio: f64) -> Result<Observation> {
    let power = mean_power(&obs.samples);
    let mut out = resample(&obs.samples, ratio)?;
    scale_to_power(&mut out, power);
    obs.samples = out;
    obs.meta.srm *= ratio;
    Ok(obs)
}
