use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use dataneeds::classifier::ingest_logits;
use dataneeds::extrapolate::{
    correlation_gate, predict_requirements, quantity_serde, CorrelationGate, QuantityPrediction, QuantitySweep,
    SweepPoint,
};
use dataneeds::metrics::{MetricName, MetricVector};
use dataneeds::whitening::{residual, WhiteningConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::files::{buffered_reader, parent_dir, read_json, resolve, write_bytes, write_json};
use crate::sweep::{RunStatus, SweepIndex};
use crate::{Generator, SCHEMA_VERSION};

pub const REPORT_FILE: &str = "report.json";
const PLOTS_DIR: &str = "plots";

/// Command-line overrides of the whitening settings stored in the index.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PredictOptions {
    pub epsilon: Option<f64>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub metric: MetricName,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// NRWMSE; lower is better.
    pub gof: Option<f64>,
    pub informative: bool,
}

/// The quantity estimate of the metric whose fit has the best GoF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferredEstimate {
    pub metric: MetricName,
    #[serde(with = "quantity_serde")]
    pub quantity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub generator: Generator,
    pub problem_id: String,
    pub dataset_id: String,
    pub n_classes: usize,
    pub n_eval: usize,
    pub points: Vec<SweepPoint>,
    pub fits: Vec<FitRow>,
    /// Weighted Kendall's τ of each metric against accuracy.
    pub correlation: Option<CorrelationGate>,
    pub whitening: WhiteningConfig,
    /// `(ε − ε̂) / ε`; absent when ε = 0.
    pub epsilon_residual: Option<f64>,
    pub prediction: QuantityPrediction,
    pub preferred: Option<PreferredEstimate>,
    pub warnings: Vec<String>,
}

/// Recomputes every metric from the score files, so the index only has to
/// name them.
fn collect_points(index: &SweepIndex, base: &Path, warnings: &mut Vec<String>) -> CliResult<(Vec<SweepPoint>, Vec<usize>)> {
    let mut points = Vec::new();
    let mut labels: Option<Vec<usize>> = None;
    for entry in &index.entries {
        let path = match (entry.status, &entry.path) {
            (RunStatus::Ok, Some(p)) => resolve(base, Path::new(p)),
            _ => {
                warnings.push(format!(
                    "run q={} trial={} skipped: {}",
                    entry.quantity,
                    entry.trial,
                    entry.error.as_deref().unwrap_or("no score file")
                ));
                continue;
            }
        };
        let pred = ingest_logits(buffered_reader(&path)?).map_err(|e| CliError::from(e).at(&path))?;
        if pred.n_classes() != index.n_classes {
            return Err(CliError::validation(format!(
                "{}: {} classes, index declares {}",
                path.display(),
                pred.n_classes(),
                index.n_classes
            )));
        }
        match &labels {
            None => labels = Some(pred.labels().to_vec()),
            Some(l) if l.as_slice() != pred.labels() => {
                return Err(CliError::validation(format!(
                    "{}: evaluation labels differ from the first score file",
                    path.display()
                )))
            }
            Some(_) => {}
        }
        points.push(SweepPoint {
            quantity: entry.quantity,
            trial: entry.trial,
            metrics: MetricVector::compute(&pred)?,
        });
    }
    let distinct: BTreeSet<u64> = points.iter().map(|p| p.quantity).collect();
    if distinct.len() < 3 {
        if points.len() < index.entries.len() {
            warnings.push(format!("only {} quantities remain after dropping failed runs", distinct.len()));
        }
        return Err(CliError::validation(format!(
            "extrapolation needs at least 3 distinct quantities with results, found {}",
            distinct.len()
        )));
    }
    Ok((points, labels.unwrap_or_default()))
}

fn plot_csv(points: &[SweepPoint], metric: MetricName, prediction: &QuantityPrediction) -> String {
    let fit = prediction.get(metric).and_then(|p| p.fit);
    let mut rows: Vec<&SweepPoint> = points.iter().collect();
    rows.sort_by_key(|p| (p.quantity, p.trial));
    let mut csv = String::from("log10_quantity,value,fitted\n");
    for p in rows {
        let x = (p.quantity as f64).log10();
        let fitted = fit.map(|f| format!("{:.16e}", f.predict(p.quantity as f64))).unwrap_or_default();
        writeln!(csv, "{x:.16e},{:.16e},{fitted}", p.metrics.get(metric)).unwrap();
    }
    csv
}

pub fn cmd_predict(index_path: &Path, options: PredictOptions, out: &Path) -> CliResult<Report> {
    let index: SweepIndex = read_json(index_path)?;
    let base = parent_dir(index_path);
    let mut whitening = index.whitening;
    if let Some(e) = options.epsilon {
        whitening.epsilon = e;
    }
    if let Some(i) = options.iterations {
        whitening.iterations = i;
    }
    if let Some(s) = options.seed {
        whitening.seed = s;
    }
    whitening
        .validate(index.n_classes)
        .map_err(|e| CliError::validation(format!("whitening: {e}")))?;

    let mut warnings = Vec::new();
    let (points, labels) = collect_points(&index, &base, &mut warnings)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let sweep = QuantitySweep {
        dataset_id: index.dataset_id.clone(),
        problem_id: index.problem_id.clone(),
        points,
    };
    let correlation = match correlation_gate(&sweep) {
        Ok(gate) => Some(gate),
        Err(e) => {
            warnings.push(format!("correlation gate unavailable: {e}"));
            None
        }
    };
    let prediction = predict_requirements(&sweep, &labels, index.n_classes, &whitening)?;
    let fits = prediction
        .per_metric
        .iter()
        .map(|p| FitRow {
            metric: p.metric,
            slope: p.fit.map(|f| f.slope),
            intercept: p.fit.map(|f| f.intercept),
            gof: p.fit.and_then(|f| f.gof),
            informative: p.informative,
        })
        .collect();
    let preferred = prediction.best_gof_metric.map(|metric| PreferredEstimate {
        metric,
        quantity: prediction.get(metric).and_then(|p| p.quantity),
    });
    let epsilon_residual = if whitening.epsilon > 0.0 {
        residual(whitening.epsilon, prediction.target_metrics.epsilon_measured).ok()
    } else {
        None
    };

    let report = Report {
        schema_version: SCHEMA_VERSION,
        generator: Generator::current(),
        problem_id: index.problem_id.clone(),
        dataset_id: index.dataset_id.clone(),
        n_classes: index.n_classes,
        n_eval: labels.len(),
        points: sweep.points.clone(),
        fits,
        correlation,
        whitening,
        epsilon_residual,
        prediction,
        preferred,
        warnings,
    };
    write_json(&out.join(REPORT_FILE), &report)?;
    for metric in MetricName::ALL {
        let csv = plot_csv(&report.points, metric, &report.prediction);
        write_bytes(&out.join(PLOTS_DIR).join(format!("{metric}.csv")), csv.as_bytes())?;
    }
    Ok(report)
}
