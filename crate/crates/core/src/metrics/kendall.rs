use crate::error::{Error, Result};

/// Weighted Kendall's τ with additive hyperbolic weights.
///
/// Observations are ranked by decreasing `x` (ties broken by decreasing `y`)
/// and a pair `(i, j)` is weighted `1/(r_i + 1) + 1/(r_j + 1)`, so agreement
/// among the top-ranked elements dominates. Pairs tied in either variable add
/// their weight to the denominator only.
pub fn weighted_kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("weighted Kendall tau needs at least 2 points"));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::NonFinite("Kendall tau input"));
    }

    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        x[b].partial_cmp(&x[a])
            .unwrap()
            .then(y[b].partial_cmp(&y[a]).unwrap())
    });
    let weights: Vec<f64> = (0..order.len()).map(|r| 1.0 / (r as f64 + 1.0)).collect();

    let mut concordance = 0.0;
    let mut total = 0.0;
    for (ra, &a) in order.iter().enumerate() {
        for (rb, &b) in order.iter().enumerate().skip(ra + 1) {
            let w = weights[ra] + weights[rb];
            total += w;
            let sx = (x[a] - x[b]).signum_or_zero();
            let sy = (y[a] - y[b]).signum_or_zero();
            let s = sx * sy;
            if s > 0.0 {
                concordance += w;
            } else if s < 0.0 {
                concordance -= w;
            }
        }
    }
    Ok(concordance / total)
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self == 0.0 {
            0.0
        } else {
            self.signum()
        }
    }
}
