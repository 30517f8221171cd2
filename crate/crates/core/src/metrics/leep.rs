use super::PredictionSet;
use crate::error::{Error, Result};

/// Log expected empirical prediction.
///
/// Builds the empirical joint `P(k, j) = 1/N Σ_i p_i[j]·[c_i = k]`, normalizes
/// each predicted-class column to `P(k | j)`, and averages
/// `ln Σ_j p_i[j]·P(c_i | j)` over observations.
pub fn leep(pred: &PredictionSet) -> Result<f64> {
    let c = pred.n_classes();
    let n = pred.len() as f64;

    // joint[k * c + j]
    let mut joint = vec![0.0; c * c];
    for (row, &k) in pred.rows().zip(pred.labels()) {
        for (j, &p) in row.iter().enumerate() {
            joint[k * c + j] += p / n;
        }
    }
    for j in 0..c {
        let column: f64 = (0..c).map(|k| joint[k * c + j]).sum();
        for k in 0..c {
            joint[k * c + j] = if column > 0.0 {
                joint[k * c + j] / column
            } else {
                0.0
            };
        }
    }

    let mut total = 0.0;
    for (i, (row, &k)) in pred.rows().zip(pred.labels()).enumerate() {
        let conditional = &joint[k * c..(k + 1) * c];
        let expected: f64 = row.iter().zip(conditional).map(|(p, q)| p * q).sum();
        if expected <= 0.0 {
            return Err(Error::degenerate(format!(
                "observation {i} has zero expected empirical prediction"
            )));
        }
        // A convex combination of conditionals; clamp rounding above 1.
        total += expected.min(1.0).ln();
    }
    Ok(total / n)
}
