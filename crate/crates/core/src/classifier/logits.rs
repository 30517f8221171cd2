//! Plain-text score files.
//!
//! ```text
//! # kind=probs classes=3
//! 0,2,1.0000000000000000e-1,2.0000000000000001e-1,6.9999999999999996e-1
//! ```
//!
//! Rows are `id,label,v0,…,v{C−1}`; an optional `id,label,…` column header is
//! skipped. `kind=logits` rows are raw scores and pass through a softmax;
//! `kind=probs` rows must already sum to 1 within [`PROBS_ROW_TOLERANCE`].

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::PredictionSet;

pub const PROBS_ROW_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    Probs,
    Logits,
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreKind::Probs => "probs",
            ScoreKind::Logits => "logits",
        })
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probs" => Ok(ScoreKind::Probs),
            "logits" => Ok(ScoreKind::Logits),
            other => Err(Error::invalid(format!("unknown score kind {other:?}"))),
        }
    }
}

/// In-place numerically stable softmax.
pub fn softmax_row(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// Writes `pred` as a `kind=probs` file with 17 significant digits, which
/// reparses to the identical values.
pub fn write_logits<W: Write>(mut out: W, pred: &PredictionSet) -> Result<()> {
    writeln!(out, "# kind={} classes={}", ScoreKind::Probs, pred.n_classes())?;
    for (i, (row, label)) in pred.rows().zip(pred.labels()).enumerate() {
        write!(out, "{i},{label}")?;
        for v in row {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line: &str) -> Result<(ScoreKind, usize)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| parse_err(1, "expected header `# kind=<probs|logits> classes=<C>`"))?;
    let (mut kind, mut classes) = (None, None);
    for field in body.split_whitespace() {
        match field.split_once('=') {
            Some(("kind", v)) => kind = Some(v.parse::<ScoreKind>().map_err(|e| parse_err(1, e.to_string()))?),
            Some(("classes", v)) => {
                classes = Some(v.parse::<usize>().map_err(|_| parse_err(1, format!("bad class count {v:?}")))?)
            }
            _ => return Err(parse_err(1, format!("unexpected header field {field:?}"))),
        }
    }
    match (kind, classes) {
        (Some(k), Some(c)) if c >= 2 => Ok((k, c)),
        (Some(_), Some(c)) => Err(parse_err(1, format!("classes={c}; at least 2 are required"))),
        _ => Err(parse_err(1, "header must declare both kind and classes")),
    }
}

/// Parses a score file, returning its declared kind alongside the prediction
/// set.
pub fn read_logits<R: BufRead>(input: R) -> Result<(ScoreKind, PredictionSet)> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty file"))??;
    let (kind, classes) = parse_header(header.trim())?;

    let mut probs = Vec::new();
    let mut labels = Vec::new();
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if labels.is_empty() && fields.first() == Some(&"id") {
            continue;
        }
        if fields.len() != classes + 2 {
            return Err(parse_err(
                line_no,
                format!("expected {} fields, found {}", classes + 2, fields.len()),
            ));
        }
        let row = labels.len();
        let label: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(line_no, format!("row {row}: bad label {:?}", fields[1])))?;
        if label >= classes {
            return Err(parse_err(line_no, format!("row {row}: label {label} out of range for {classes} classes")));
        }
        let mut values = fields[2..]
            .iter()
            .map(|v| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(parse_err(line_no, format!("row {row}: bad value {v:?}"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        match kind {
            ScoreKind::Logits => softmax_row(&mut values),
            ScoreKind::Probs => {
                if values.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(parse_err(line_no, format!("row {row}: probability outside [0, 1]")));
                }
                let sum: f64 = values.iter().sum();
                if (sum - 1.0).abs() > PROBS_ROW_TOLERANCE {
                    return Err(parse_err(line_no, format!("row {row}: probabilities sum to {sum}")));
                }
            }
        }
        probs.extend(values);
        labels.push(label);
    }
    let pred = PredictionSet::with_tolerance(probs, labels, classes, PROBS_ROW_TOLERANCE)?;
    Ok((kind, pred))
}

pub fn ingest_logits<R: BufRead>(input: R) -> Result<PredictionSet> {
    read_logits(input).map(|(_, pred)| pred)
}
