use super::{hard_labels, PredictionSet};

/// Negative conditional entropy of the true labels given the hard predictions.
///
/// `Σ_j P(ĉ=j) Σ_k P(c=k | ĉ=j) ln P(c=k | ĉ=j)` over empirical frequencies,
/// with the conditional taken as joint over marginal. Empty prediction bins
/// are skipped and `0 ln 0 = 0`.
pub fn nce(pred: &PredictionSet) -> f64 {
    let c = pred.n_classes();
    let n = pred.len() as f64;
    let mut joint = vec![0usize; c * c];
    let mut marginal = vec![0usize; c];
    for (j, &k) in hard_labels(pred).iter().zip(pred.labels()) {
        joint[j * c + k] += 1;
        marginal[*j] += 1;
    }

    let mut total = 0.0;
    for (j, &m) in marginal.iter().enumerate() {
        if m == 0 {
            continue;
        }
        let m = m as f64;
        let inner: f64 = joint[j * c..(j + 1) * c]
            .iter()
            .filter(|&&count| count > 0)
            .map(|&count| {
                let p = count as f64 / m;
                p * p.ln()
            })
            .sum();
        total += (m / n) * inner;
    }
    total
}
