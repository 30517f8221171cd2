use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{extract_all, FeatureVector};
use super::logits::softmax_row;
use crate::error::{Error, Result};
use crate::metrics::PredictionSet;
use crate::rfsignal::Observation;
use crate::rng::stream_rng;

const SUBSAMPLE_STREAM: u64 = 0x5355_4253;

/// Gradient-descent hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub quantity: usize,
}

/// Row-major feature matrix with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    n_classes: usize,
}

impl LabeledFeatures {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize, n_classes: usize) -> Result<Self> {
        if dim == 0 || n_classes < 2 {
            return Err(Error::invalid("need a positive feature dimension and at least 2 classes"));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::invalid(format!(
                "{} feature values for {} observations of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        if let Some(&c) = labels.iter().find(|&&c| c >= n_classes) {
            return Err(Error::invalid(format!("label {c} out of range for {n_classes} classes")));
        }
        Ok(Self {
            features,
            labels,
            dim,
            n_classes,
        })
    }

    pub fn from_vectors(vectors: &[FeatureVector], labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let features = vectors.iter().flat_map(|v| v.0).collect();
        Self::new(features, labels, super::FEATURE_DIM, n_classes)
    }

    pub fn from_observations(observations: &[Observation], n_classes: usize) -> Result<Self> {
        let vectors = extract_all(observations)?;
        let labels = observations.iter().map(|o| o.label as usize).collect();
        Self::from_vectors(&vectors, labels, n_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// `quantity` indices per class, drawn from a per-class shuffle seeded by
    /// `seed`. For a fixed seed, smaller quantities select prefixes of larger
    /// ones, so the training sets of a sweep are nested.
    pub fn balanced_subsample(&self, quantity: usize, seed: u64) -> Result<Vec<usize>> {
        let mut chosen = Vec::with_capacity(quantity * self.n_classes);
        for class in 0..self.n_classes {
            let mut members: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == class).collect();
            if members.len() < quantity {
                return Err(Error::InsufficientData {
                    class,
                    needed: quantity,
                    available: members.len(),
                });
            }
            members.shuffle(&mut stream_rng(seed, &[SUBSAMPLE_STREAM, class as u64]));
            chosen.extend_from_slice(&members[..quantity]);
        }
        chosen.sort_unstable();
        Ok(chosen)
    }
}

/// Linear softmax classifier over standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxModel {
    /// `n_classes × dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub n_classes: usize,
    pub dim: usize,
    pub train_meta: TrainMeta,
}

impl SoftmaxModel {
    /// All-zero parameters with identity standardization.
    pub fn zeros(dim: usize, n_classes: usize) -> Self {
        Self {
            weights: vec![0.0; n_classes * dim],
            bias: vec![0.0; n_classes],
            feature_mean: vec![0.0; dim],
            feature_scale: vec![1.0; dim],
            n_classes,
            dim,
            train_meta: TrainMeta {
                epochs: 0,
                learning_rate: 0.0,
                seed: 0,
                quantity: 0,
            },
        }
    }

    fn standardize(&self, x: &[f64], out: &mut [f64]) {
        for k in 0..self.dim {
            out[k] = (x[k] - self.feature_mean[k]) / self.feature_scale[k];
        }
    }

    fn scores(&self, z: &[f64], out: &mut [f64]) {
        for ((o, w), b) in out.iter_mut().zip(self.weights.chunks_exact(self.dim)).zip(&self.bias) {
            *o = b + w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// Class probabilities for one raw feature vector.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        let mut s = vec![0.0; self.n_classes];
        self.standardize(x, &mut z);
        self.scores(&z, &mut s);
        softmax_row(&mut s);
        s
    }
}

/// Trains on exactly `quantity` observations per class: standardization from
/// the subsample only, then full-batch gradient descent on the mean
/// cross-entropy starting from zero parameters.
pub fn train(data: &LabeledFeatures, quantity: usize, config: &TrainConfig, seed: u64) -> Result<SoftmaxModel> {
    if quantity == 0 {
        return Err(Error::invalid("quantity per class must be positive"));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::invalid("learning_rate must be positive"));
    }
    let idx = data.balanced_subsample(quantity, seed)?;
    let (d, c, n) = (data.dim, data.n_classes, idx.len());
    let nf = n as f64;

    let mut model = SoftmaxModel::zeros(d, c);
    for k in 0..d {
        let mean = idx.iter().map(|&i| data.row(i)[k]).sum::<f64>() / nf;
        let var = idx.iter().map(|&i| (data.row(i)[k] - mean).powi(2)).sum::<f64>() / nf;
        model.feature_mean[k] = mean;
        model.feature_scale[k] = if var.sqrt() > 1e-12 * mean.abs().max(1.0) { var.sqrt() } else { 1.0 };
    }
    let mut z = vec![0.0; n * d];
    for (r, &i) in idx.iter().enumerate() {
        model.standardize(data.row(i), &mut z[r * d..(r + 1) * d]);
    }
    let labels: Vec<usize> = idx.iter().map(|&i| data.labels[i]).collect();

    let mut p = vec![0.0; c];
    let mut grad_w = vec![0.0; c * d];
    let mut grad_b = vec![0.0; c];
    for _ in 0..config.epochs {
        grad_w.fill(0.0);
        grad_b.fill(0.0);
        for r in 0..n {
            let zr = &z[r * d..(r + 1) * d];
            model.scores(zr, &mut p);
            softmax_row(&mut p);
            p[labels[r]] -= 1.0;
            for k in 0..c {
                grad_b[k] += p[k];
                let g = &mut grad_w[k * d..(k + 1) * d];
                for (gj, zj) in g.iter_mut().zip(zr) {
                    *gj += p[k] * zj;
                }
            }
        }
        let step = config.learning_rate / nf;
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w -= step * g;
        }
        for (b, g) in model.bias.iter_mut().zip(&grad_b) {
            *b -= step * g;
        }
    }
    if model.weights.iter().chain(&model.bias).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("trained parameters"));
    }
    model.train_meta = TrainMeta {
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        seed,
        quantity,
    };
    Ok(model)
}

/// Softmax outputs for every row of `data`, scored against its labels.
pub fn evaluate_features(model: &SoftmaxModel, data: &LabeledFeatures) -> Result<PredictionSet> {
    if data.dim != model.dim || data.n_classes != model.n_classes {
        return Err(Error::invalid(format!(
            "model expects {} features / {} classes, data has {} / {}",
            model.dim, model.n_classes, data.dim, data.n_classes
        )));
    }
    let probs = (0..data.len()).flat_map(|i| model.predict_proba(data.row(i))).collect();
    PredictionSet::new(probs, data.labels.clone(), model.n_classes)
}

pub fn evaluate(model: &SoftmaxModel, observations: &[Observation]) -> Result<PredictionSet> {
    evaluate_features(model, &LabeledFeatures::from_observations(observations, model.n_classes)?)
}
