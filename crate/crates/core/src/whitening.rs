//! Near-perfect reference predictions by label whitening.
//!
//! Truth labels are one-hot encoded, smoothed by `γ`, mapped to log-odds,
//! perturbed with i.i.d. Gaussian noise whose level `σ(ε)` targets an accuracy
//! degradation `ε`, mapped back through the logistic function and normalized
//! per row. Scoring the result yields the metric values a model erring at rate
//! `ε` would be expected to reach; those values are the inversion targets for
//! the quantity regressions.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricVector, PredictionSet};
use crate::rng::{stream_rng, StreamRng};

/// Starting point of [`default_gamma`].
pub const BASE_GAMMA: f64 = 1.0 / 281_474_976_710_656.0; // 2^-48
pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const DEFAULT_ITERATIONS: usize = 1000;

/// Stream domain for whitening draws, keeps them apart from other consumers of
/// the same master seed.
const WHITEN_STREAM: u64 = 0x5748_4954;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteningConfig {
    pub gamma: f64,
    /// Target accuracy degradation. Zero disables the noise entirely.
    pub epsilon: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl WhiteningConfig {
    /// Defaults for a `classes`-way problem: `γ = default_gamma(C)`,
    /// `ε = 1e-5`, 1000 iterations.
    pub fn for_classes(classes: usize, seed: u64) -> Self {
        Self {
            gamma: default_gamma(classes),
            epsilon: DEFAULT_EPSILON,
            iterations: DEFAULT_ITERATIONS,
            seed,
        }
    }

    pub fn validate(&self, classes: usize) -> Result<()> {
        if classes < 2 {
            return Err(Error::invalid("whitening needs at least 2 classes"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!("gamma {} not in (0, 1)", self.gamma)));
        }
        let chance = 1.0 - 1.0 / classes as f64;
        if !(self.epsilon >= 0.0 && self.epsilon < chance) {
            return Err(Error::invalid(format!(
                "epsilon {} not in [0, {chance}) for {classes} classes",
                self.epsilon
            )));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("whitening needs at least one iteration"));
        }
        Ok(())
    }

    /// Noise level for this configuration; zero when `ε = 0`.
    pub fn sigma(&self, classes: usize) -> Result<f64> {
        if self.epsilon == 0.0 {
            Ok(0.0)
        } else {
            sigma_for_epsilon(self.epsilon, classes, self.gamma)
        }
    }
}

/// Averages of the whitened-prediction metrics over the Monte Carlo repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    pub accuracy_mean: f64,
    pub nce_mean: f64,
    pub leep_mean: f64,
    pub logme_mean: f64,
    /// Mean measured degradation `1 − accuracy`.
    pub epsilon_measured: f64,
    pub accuracy_stderr: f64,
    pub nce_stderr: f64,
    pub leep_stderr: f64,
    pub logme_stderr: f64,
    pub iterations: usize,
    pub sigma: f64,
}

impl TargetMetrics {
    pub fn means(&self) -> MetricVector {
        MetricVector {
            accuracy: self.accuracy_mean,
            nce: self.nce_mean,
            leep: self.leep_mean,
            logme: self.logme_mean,
        }
    }
}

/// `l − γ(l − 1/C)` on one-hot rows.
pub fn smooth_labels(one_hot: &[f64], classes: usize, gamma: f64) -> Result<Vec<f64>> {
    if classes < 2 || !one_hot.len().is_multiple_of(classes) {
        return Err(Error::invalid("matrix shape does not match class count"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma {gamma} not in (0, 1)")));
    }
    let uniform = 1.0 / classes as f64;
    for (i, row) in one_hot.chunks_exact(classes).enumerate() {
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || zeros != classes - 1 {
            return Err(Error::invalid(format!("row {i} is not one-hot")));
        }
    }
    Ok(one_hot.iter().map(|&l| l - gamma * (l - uniform)).collect())
}

/// Smallest power-of-two smoothing factor, starting at 2⁻⁴⁸, that visibly
/// changes both the hot and the cold entries in `f64`.
pub fn default_gamma(classes: usize) -> f64 {
    let c = classes.max(2) as f64;
    let mut gamma = BASE_GAMMA;
    while !(1.0 - gamma * (1.0 - 1.0 / c) < 1.0 && gamma / c > 0.0) && gamma < 0.5 {
        gamma *= 2.0;
    }
    gamma
}

/// Elementwise log-odds.
pub fn logit_transform(p: &[f64]) -> Result<Vec<f64>> {
    p.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 && v < 1.0 {
                Ok((v / (1.0 - v)).ln())
            } else {
                Err(Error::invalid(format!(
                    "entry {i} = {v} is not strictly inside (0, 1); were the labels smoothed?"
                )))
            }
        })
        .collect()
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse error function.
///
/// Giles' single-precision polynomial approximation in `w = −ln(1 − y²)`
/// followed by Newton refinement on `erfc(x) − (1 − y)`. Inside the
/// approximation's design range (`1 − y > 2⁻²⁴`) one step squares the ~1e-7
/// relative error; the far tail takes a few more.
pub fn erf_inv(y: f64) -> f64 {
    if y.is_nan() || !(-1.0..=1.0).contains(&y) {
        return f64::NAN;
    }
    if y < 0.0 {
        return -erf_inv(-y);
    }
    if y == 1.0 {
        return f64::INFINITY;
    }
    let mut w = -((1.0 - y) * (1.0 + y)).ln();
    let p = if w < 5.0 {
        w -= 2.5;
        [
            3.432_739_39e-7,
            -3.523_387_7e-6,
            -4.391_506_54e-6,
            2.185_808_7e-4,
            -1.253_725_03e-3,
            -4.177_681_64e-3,
            2.466_407_27e-1,
            1.501_409_41,
        ]
        .iter()
        .fold(2.810_226_36e-8, |p, &c| c + p * w)
    } else {
        w = w.sqrt() - 3.0;
        [
            1.009_505_58e-4,
            1.349_343_22e-3,
            -3.673_428_44e-3,
            5.739_507_73e-3,
            -7.622_461_3e-3,
            9.438_870_47e-3,
            1.001_674_06,
            2.832_976_82,
        ]
        .iter()
        .fold(-2.002_142_57e-4, |p, &c| c + p * w)
    };
    let mut x = p * y;
    let tail = 1.0 - y;
    for _ in 0..8 {
        let slope = std::f64::consts::FRAC_2_SQRT_PI * (-x * x).exp();
        let step = (statrs::function::erf::erfc(x) - tail) / slope;
        x += step;
        if step.abs() <= 1e-15 * x.abs() {
            break;
        }
    }
    x
}

/// Noise level that degrades accuracy by `ε`.
///
/// The logit gap between the hot and cold smoothed entries is
/// `ln(C²(1−γ) + γ²(C−1)) − ln(γ²(C−1))`; each of the `C − 1` pairwise
/// comparisons is required to survive with probability `(1 − ε)^{1/(C−1)}`.
pub fn sigma_for_epsilon(epsilon: f64, classes: usize, gamma: f64) -> Result<f64> {
    if classes < 2 {
        return Err(Error::invalid("need at least 2 classes"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma {gamma} not in (0, 1)")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon {epsilon} not in (0, 1)")));
    }
    let c = classes as f64;
    let gap = (c * c * (1.0 - gamma) + gamma * gamma * (c - 1.0)).ln()
        - (gamma * gamma * (c - 1.0)).ln();
    let arg = 2.0 * (1.0 - epsilon).powf(1.0 / (c - 1.0)) - 1.0;
    if arg <= 0.0 {
        return Err(Error::UnboundedNoise { epsilon, classes });
    }
    Ok(gap / (2.0 * erf_inv(arg)))
}

/// Whitened predictions for `labels` at an explicit noise level.
pub fn whiten_with_sigma(
    labels: &[usize],
    classes: usize,
    gamma: f64,
    sigma: f64,
    rng: &mut StreamRng,
) -> Result<PredictionSet> {
    if labels.is_empty() {
        return Err(Error::invalid("no labels to whiten"));
    }
    if let Some(&c) = labels.iter().find(|&&c| c >= classes) {
        return Err(Error::invalid(format!("label {c} out of range for {classes} classes")));
    }
    let c = classes as f64;
    let hot = 1.0 - gamma * (1.0 - 1.0 / c);
    let cold = gamma / c;
    let hot_logit = logit_transform(&[hot])?[0];
    let cold_logit = logit_transform(&[cold])?[0];

    let mut probs = Vec::with_capacity(labels.len() * classes);
    let mut row = vec![0.0; classes];
    for &label in labels {
        for (k, v) in row.iter_mut().enumerate() {
            let m = if k == label { hot_logit } else { cold_logit };
            let noise: f64 = if sigma > 0.0 {
                sigma * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            *v = logistic(m + noise);
        }
        let sum: f64 = row.iter().sum();
        probs.extend(row.iter().map(|v| v / sum));
    }
    PredictionSet::new(probs, labels.to_vec(), classes)
}

/// One whitening draw at the noise level implied by `config`.
pub fn whiten(
    labels: &[usize],
    classes: usize,
    config: &WhiteningConfig,
    rng: &mut StreamRng,
) -> Result<PredictionSet> {
    config.validate(classes)?;
    let sigma = config.sigma(classes)?;
    whiten_with_sigma(labels, classes, config.gamma, sigma, rng)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of the metrics reached by whitened predictions.
///
/// Iteration `i` draws from the stream `(seed, i)`; results are aggregated in
/// iteration order, so the output is independent of the thread count.
pub fn target_metric_estimate(
    labels: &[usize],
    classes: usize,
    config: &WhiteningConfig,
) -> Result<TargetMetrics> {
    config.validate(classes)?;
    let sigma = config.sigma(classes)?;
    let runs: Vec<MetricVector> = (0..config.iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, &[WHITEN_STREAM, i as u64]);
            let pred = whiten_with_sigma(labels, classes, config.gamma, sigma, &mut rng)?;
            MetricVector::compute(&pred)
        })
        .collect::<Result<_>>()?;

    let column = |f: fn(&MetricVector) -> f64| runs.iter().map(f).collect::<Vec<_>>();
    let (accuracy_mean, accuracy_stderr) = mean_and_stderr(&column(|m| m.accuracy));
    let (nce_mean, nce_stderr) = mean_and_stderr(&column(|m| m.nce));
    let (leep_mean, leep_stderr) = mean_and_stderr(&column(|m| m.leep));
    let (logme_mean, logme_stderr) = mean_and_stderr(&column(|m| m.logme));
    let (epsilon_measured, _) = mean_and_stderr(&column(|m| 1.0 - m.accuracy));
    Ok(TargetMetrics {
        accuracy_mean,
        nce_mean,
        leep_mean,
        logme_mean,
        epsilon_measured,
        accuracy_stderr,
        nce_stderr,
        leep_stderr,
        logme_stderr,
        iterations: config.iterations,
        sigma,
    })
}

/// Relative residual `(ε − ε̂) / ε` between configured and measured degradation.
pub fn residual(epsilon: f64, epsilon_hat: f64) -> Result<f64> {
    if epsilon == 0.0 {
        return Err(Error::invalid("residual undefined for epsilon = 0"));
    }
    Ok((epsilon - epsilon_hat) / epsilon)
}
