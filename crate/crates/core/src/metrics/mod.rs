//! Performance and transferability scores over a [`PredictionSet`].
//!
//! All logarithms are natural. Scores follow the usual transferability
//! conventions: NCE and LEEP are non-positive with 0 as the ideal, LogME is an
//! average log evidence per observation and class.

mod kendall;
mod leep;
mod logme;
mod nce;

pub use kendall::weighted_kendall_tau;
pub use leep::leep;
pub use logme::{
    logme, EvidenceParams, LogMe, BETA_CAP, LOGME_MAX_ITERATIONS, LOGME_PARAM_TOLERANCE,
    LOGME_TOLERANCE,
};
pub use nce::nce;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the row sums of a probability matrix.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Per-observation class probabilities together with the true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    probs: Vec<f64>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl PredictionSet {
    /// Builds a prediction set from a row-major `labels.len() × n_classes`
    /// probability matrix.
    pub fn new(probs: Vec<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        Self::with_tolerance(probs, labels, n_classes, ROW_SUM_TOLERANCE)
    }

    /// As [`PredictionSet::new`] with a caller-chosen row-sum tolerance.
    pub fn with_tolerance(
        probs: Vec<f64>,
        labels: Vec<usize>,
        n_classes: usize,
        tolerance: f64,
    ) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::invalid(format!("need at least 2 classes, got {n_classes}")));
        }
        if labels.is_empty() {
            return Err(Error::invalid("prediction set has no observations"));
        }
        if probs.len() != labels.len() * n_classes {
            return Err(Error::invalid(format!(
                "probability matrix has {} entries, expected {} x {}",
                probs.len(),
                labels.len(),
                n_classes
            )));
        }
        for (i, row) in probs.chunks_exact(n_classes).enumerate() {
            if row.iter().any(|p| !p.is_finite()) {
                return Err(Error::NonFinite("probability matrix"));
            }
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::invalid(format!("row {i} has an entry outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::invalid(format!("row {i} sums to {sum}, not 1")));
            }
        }
        if let Some((i, &c)) = labels.iter().enumerate().find(|(_, &c)| c >= n_classes) {
            return Err(Error::invalid(format!(
                "label {c} at row {i} is out of range for {n_classes} classes"
            )));
        }
        Ok(Self {
            probs,
            labels,
            n_classes,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        let n_classes = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_classes) {
            return Err(Error::invalid("rows have differing lengths"));
        }
        Self::new(rows.concat(), labels, n_classes)
    }

    /// One-hot predictions equal to `predicted`, scored against `labels`.
    pub fn one_hot(predicted: &[usize], labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let mut probs = vec![0.0; predicted.len() * n_classes];
        for (i, &p) in predicted.iter().enumerate() {
            if p >= n_classes {
                return Err(Error::invalid(format!("prediction {p} out of range")));
            }
            probs[i * n_classes + p] = 1.0;
        }
        Self::new(probs, labels, n_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Row-major probability matrix.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.n_classes..(i + 1) * self.n_classes]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.probs.chunks_exact(self.n_classes)
    }
}

/// The four per-model scores tracked across a quantity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub accuracy: f64,
    pub nce: f64,
    pub leep: f64,
    pub logme: f64,
}

impl MetricVector {
    pub fn compute(pred: &PredictionSet) -> Result<Self> {
        Ok(Self {
            accuracy: accuracy(pred),
            nce: nce(pred),
            leep: leep(pred)?,
            logme: logme(pred)?.score,
        })
    }

    pub fn get(&self, metric: MetricName) -> f64 {
        match metric {
            MetricName::Accuracy => self.accuracy,
            MetricName::Nce => self.nce,
            MetricName::Leep => self.leep,
            MetricName::Logme => self.logme,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Accuracy,
    Nce,
    Leep,
    Logme,
}

impl MetricName {
    pub const ALL: [MetricName; 4] = [
        MetricName::Accuracy,
        MetricName::Nce,
        MetricName::Leep,
        MetricName::Logme,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Accuracy => "accuracy",
            MetricName::Nce => "nce",
            MetricName::Leep => "leep",
            MetricName::Logme => "logme",
        }
    }
}

impl std::fmt::Display for MetricName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &p) in row.iter().enumerate().skip(1) {
        if p > row[best] {
            best = j;
        }
    }
    best
}

/// Hard predictions: per-row argmax, ties resolved to the lowest class index.
pub fn hard_labels(pred: &PredictionSet) -> Vec<usize> {
    pred.rows().map(argmax).collect()
}

pub fn accuracy(pred: &PredictionSet) -> f64 {
    let hits = pred
        .rows()
        .zip(pred.labels())
        .filter(|(row, &c)| argmax(row) == c)
        .count();
    hits as f64 / pred.len() as f64
}
