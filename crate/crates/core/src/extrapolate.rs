//! Log-linear regression of metrics against training-set size, and inversion
//! of those fits at whitening-derived targets.
//!
//! Quantities are observations per class (OPC). Every fit is
//! `value = slope · log10(q) + intercept`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metrics::{weighted_kendall_tau, MetricName, MetricVector};
use crate::whitening::{target_metric_estimate, TargetMetrics, WhiteningConfig};

/// Fits with `|slope|` at or below this many units per decade are flat.
pub const SLOPE_TOLERANCE: f64 = 1e-12;

/// Relative slack when deciding whether a point sits on a bin edge.
const EDGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub quantity: u64,
    pub trial: u32,
    pub metrics: MetricVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantitySweep {
    pub dataset_id: String,
    pub problem_id: String,
    pub points: Vec<SweepPoint>,
}

impl QuantitySweep {
    pub fn validate(&self) -> Result<()> {
        if self.points.iter().any(|p| p.quantity == 0) {
            return Err(Error::invalid("quantities must be positive"));
        }
        let distinct = self.distinct_quantities();
        if distinct < 3 {
            return Err(Error::invalid(format!(
                "sweep needs at least 3 distinct quantities, has {distinct}"
            )));
        }
        Ok(())
    }

    pub fn distinct_quantities(&self) -> usize {
        let mut q: Vec<u64> = self.points.iter().map(|p| p.quantity).collect();
        q.sort_unstable();
        q.dedup();
        q.len()
    }

    pub fn quantities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.quantity as f64).collect()
    }

    pub fn values(&self, metric: MetricName) -> Vec<f64> {
        self.points.iter().map(|p| p.metrics.get(metric)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLinearFit {
    /// Metric units per decade of quantity.
    pub slope: f64,
    pub intercept: f64,
    /// NRWMSE of the fit; `None` when the values have zero variance.
    pub gof: Option<f64>,
    pub n_points: usize,
}

impl LogLinearFit {
    pub fn predict(&self, quantity: f64) -> f64 {
        self.slope * quantity.log10() + self.intercept
    }

    /// The slope is positive beyond [`SLOPE_TOLERANCE`], so larger targets
    /// require more data.
    pub fn is_informative(&self) -> bool {
        self.slope > SLOPE_TOLERANCE
    }
}

fn check_quantities(quantities: &[f64]) -> Result<()> {
    if quantities.iter().any(|&q| !(q.is_finite() && q > 0.0)) {
        return Err(Error::invalid("quantities must be positive and finite"));
    }
    Ok(())
}

/// Normalized weights that balance three log-spaced quantity bins.
///
/// Bins are `[e0, e1)`, `[e1, e2)`, `[e2, e3]` with edges evenly spaced in
/// `log q` between the smallest and largest quantity. A point in an outer bin
/// gets raw weight `n / |bin|`, a middle point `n / (3 |bin|)`.
pub fn bin_weights(quantities: &[f64]) -> Result<Vec<f64>> {
    check_quantities(quantities)?;
    let (lo, hi) = quantities
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &q| (a.min(q), b.max(q)));
    if quantities.len() < 2 || lo == hi {
        return Err(Error::degenerate("bin weights need at least two distinct quantities"));
    }
    let (log_lo, span) = (lo.ln(), hi.ln() - lo.ln());
    let bins: Vec<usize> = quantities
        .iter()
        .map(|&q| {
            let t = 3.0 * (q.ln() - log_lo) / span;
            let snapped = if (t - t.round()).abs() < EDGE_SLACK { t.round() } else { t };
            (snapped.floor() as usize).min(2)
        })
        .collect();
    let mut counts = [0usize; 3];
    for &b in &bins {
        counts[b] += 1;
    }
    let n = quantities.len() as f64;
    let raw: Vec<f64> = bins
        .iter()
        .map(|&b| {
            let scale = if b == 1 { 3.0 } else { 1.0 };
            n / (scale * counts[b] as f64)
        })
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

fn sample_variance(values: &[f64]) -> f64 {
    if values.iter().all(|&v| v == values[0]) {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Normalized root weighted mean squared error of `fit` over the points.
pub fn gof_nrwmse(fit: &LogLinearFit, quantities: &[f64], values: &[f64]) -> Result<f64> {
    if quantities.len() != values.len() {
        return Err(Error::invalid("quantities and values differ in length"));
    }
    let weights = bin_weights(quantities)?;
    let variance = sample_variance(values);
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::degenerate("values have zero variance"));
    }
    let weighted: f64 = weights
        .iter()
        .zip(quantities)
        .zip(values)
        .map(|((w, &q), v)| w * (fit.predict(q) - v).powi(2))
        .sum();
    Ok((weighted / variance).sqrt())
}

/// Ordinary least squares of `values` on `log10(quantities)`.
pub fn fit_loglinear(quantities: &[f64], values: &[f64]) -> Result<LogLinearFit> {
    if quantities.len() != values.len() {
        return Err(Error::invalid("quantities and values differ in length"));
    }
    if quantities.len() < 3 {
        return Err(Error::invalid("a log-linear fit needs at least 3 points"));
    }
    check_quantities(quantities)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fit values"));
    }
    let x: Vec<f64> = quantities.iter().map(|q| q.log10()).collect();
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = values.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mean_x).powi(2)).sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::degenerate("all quantities are equal"));
    }
    let sxy: f64 = x.iter().zip(values).map(|(xi, yi)| (xi - mean_x) * (yi - mean_y)).sum();
    let slope = sxy / sxx;
    let mut fit = LogLinearFit {
        slope,
        intercept: mean_y - slope * mean_x,
        gof: None,
        n_points: x.len(),
    };
    fit.gof = match gof_nrwmse(&fit, quantities, values) {
        Ok(g) => Some(g),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(fit)
}

/// Quantity at which `fit` reaches `target`: `10^((target − b) / s)`.
///
/// A flat fit returns `+∞` for a target above its intercept and
/// [`Error::AlreadyAchieved`] otherwise.
pub fn invert_fit(fit: &LogLinearFit, target: f64) -> Result<f64> {
    if !(fit.slope.is_finite() && fit.intercept.is_finite() && target.is_finite()) {
        return Err(Error::NonFinite("fit inversion"));
    }
    if fit.slope.abs() <= SLOPE_TOLERANCE {
        return if target > fit.intercept {
            Ok(f64::INFINITY)
        } else {
            Err(Error::AlreadyAchieved {
                target,
                intercept: fit.intercept,
            })
        };
    }
    Ok(10f64.powf((target - fit.intercept) / fit.slope))
}

/// Geometric mean of two quantity estimates (their average in log space).
pub fn midpoint_estimate(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::invalid("midpoint needs positive quantities"));
    }
    if a.is_infinite() || b.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(10f64.powf(0.5 * (a.log10() + b.log10())))
}

/// How a per-metric quantity estimate was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum EstimateStatus {
    Estimated,
    /// The fit does not increase towards the target.
    Unbounded,
    /// The target is already met; the smallest observed quantity is reported.
    AlreadyAchieved,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPrediction {
    pub metric: MetricName,
    pub fit: Option<LogLinearFit>,
    pub target: f64,
    #[serde(with = "quantity_serde")]
    pub quantity: Option<f64>,
    pub informative: bool,
    pub status: EstimateStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityPrediction {
    pub per_metric: Vec<MetricPrediction>,
    /// Estimate from NCE.
    #[serde(with = "quantity_serde")]
    pub lower_hint: Option<f64>,
    /// Estimate from LogME.
    #[serde(with = "quantity_serde")]
    pub upper_hint: Option<f64>,
    #[serde(with = "quantity_serde")]
    pub midpoint: Option<f64>,
    /// Metric whose fit has the lowest NRWMSE.
    pub best_gof_metric: Option<MetricName>,
    pub target_metrics: TargetMetrics,
}

impl QuantityPrediction {
    pub fn get(&self, metric: MetricName) -> Option<&MetricPrediction> {
        self.per_metric.iter().find(|p| p.metric == metric)
    }

    /// Estimate of the GoF-preferred metric.
    pub fn preferred_quantity(&self) -> Option<f64> {
        self.best_gof_metric.and_then(|m| self.get(m)).and_then(|p| p.quantity)
    }
}

fn predict_metric(sweep: &QuantitySweep, metric: MetricName, target: f64) -> MetricPrediction {
    let quantities = sweep.quantities();
    let values = sweep.values(metric);
    let failed = |fit, msg: String| MetricPrediction {
        metric,
        fit,
        target,
        quantity: None,
        informative: false,
        status: EstimateStatus::Failed(msg),
    };
    let fit = match fit_loglinear(&quantities, &values) {
        Ok(fit) => fit,
        Err(e) => return failed(None, e.to_string()),
    };
    let q_max = quantities.iter().cloned().fold(0.0, f64::max);
    let q_min = quantities.iter().cloned().fold(f64::INFINITY, f64::min);
    let informative = fit.is_informative();

    // A decreasing fit never climbs to a target above its observed range.
    if fit.slope < -SLOPE_TOLERANCE && target > fit.predict(q_max) {
        return MetricPrediction {
            metric,
            fit: Some(fit),
            target,
            quantity: Some(f64::INFINITY),
            informative,
            status: EstimateStatus::Unbounded,
        };
    }
    let (quantity, status) = match invert_fit(&fit, target) {
        Ok(q) if q.is_infinite() => (q, EstimateStatus::Unbounded),
        Ok(q) => (q, EstimateStatus::Estimated),
        Err(Error::AlreadyAchieved { .. }) => (q_min, EstimateStatus::AlreadyAchieved),
        Err(e) => return failed(Some(fit), e.to_string()),
    };
    MetricPrediction {
        metric,
        fit: Some(fit),
        target,
        quantity: Some(quantity),
        informative,
        status,
    }
}

/// Fits every metric and inverts each fit at the matching target value.
pub fn predict_from_targets(sweep: &QuantitySweep, targets: TargetMetrics) -> Result<QuantityPrediction> {
    sweep.validate()?;
    let means = targets.means();
    let per_metric: Vec<MetricPrediction> = MetricName::ALL
        .iter()
        .map(|&m| predict_metric(sweep, m, means.get(m)))
        .collect();

    let quantity_of = |m: MetricName| per_metric.iter().find(|p| p.metric == m).and_then(|p| p.quantity);
    let lower_hint = quantity_of(MetricName::Nce);
    let upper_hint = quantity_of(MetricName::Logme);
    let midpoint = match (lower_hint, upper_hint) {
        (Some(a), Some(b)) => midpoint_estimate(a, b).ok(),
        _ => None,
    };
    let best_gof_metric = per_metric
        .iter()
        .filter_map(|p| Some((p.metric, p.fit?.gof?)))
        .fold(None, |best: Option<(MetricName, f64)>, (m, g)| match best {
            Some((_, bg)) if bg <= g => best,
            _ => Some((m, g)),
        })
        .map(|(m, _)| m);

    Ok(QuantityPrediction {
        per_metric,
        lower_hint,
        upper_hint,
        midpoint,
        best_gof_metric,
        target_metrics: targets,
    })
}

/// Whitening targets for the evaluation labels, then [`predict_from_targets`].
pub fn predict_requirements(
    sweep: &QuantitySweep,
    labels: &[usize],
    classes: usize,
    whitening: &WhiteningConfig,
) -> Result<QuantityPrediction> {
    sweep.validate()?;
    let targets = target_metric_estimate(labels, classes, whitening)?;
    predict_from_targets(sweep, targets)
}

/// Weighted Kendall's τ between accuracy and each transferability metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationGate {
    pub nce: f64,
    pub leep: f64,
    pub logme: f64,
}

impl CorrelationGate {
    pub fn get(&self, metric: MetricName) -> Option<f64> {
        match metric {
            MetricName::Accuracy => None,
            MetricName::Nce => Some(self.nce),
            MetricName::Leep => Some(self.leep),
            MetricName::Logme => Some(self.logme),
        }
    }
}

pub fn correlation_gate(sweep: &QuantitySweep) -> Result<CorrelationGate> {
    if sweep.points.len() < 3 {
        return Err(Error::invalid("correlation gate needs at least 3 points"));
    }
    let accuracy = sweep.values(MetricName::Accuracy);
    let tau = |m| weighted_kendall_tau(&accuracy, &sweep.values(m));
    Ok(CorrelationGate {
        nce: tau(MetricName::Nce)?,
        leep: tau(MetricName::Leep)?,
        logme: tau(MetricName::Logme)?,
    })
}

/// Quantities serialize as JSON numbers, with `+∞` written as `"inf"`.
pub mod quantity_serde {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(value: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            None => s.serialize_none(),
            Some(v) if v.is_infinite() && *v > 0.0 => s.serialize_some("inf"),
            Some(v) => s.serialize_some(v),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Number(v)) => Ok(Some(v)),
            Some(Repr::Text(t)) if t == "inf" => Ok(Some(f64::INFINITY)),
            Some(Repr::Text(t)) => Err(serde::de::Error::custom(format!("invalid quantity {t:?}"))),
        }
    }
}
