//! Independent reference implementations used only by tests.
//!
//! Each oracle is a literal, loop-based transcription of the defining formula
//! and shares no code with the library.
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Random strictly positive probability rows and uniform labels.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, c: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let rows = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..c).map(|_| rng.random::<f64>().powi(2) + 1e-4).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        })
        .collect();
    let labels = (0..n).map(|_| rng.random_range(0..c)).collect();
    (rows, labels)
}

pub fn argmax_oracle(row: &[f64]) -> usize {
    let mut best = 0;
    for j in 0..row.len() {
        if row[j] > row[best] {
            best = j;
        }
    }
    best
}

/// NCE: `Σ_j P(ĉ=j) Σ_k P(c=k|ĉ=j) log P(c=k|ĉ=j)` with the conditional as
/// joint frequency divided by the marginal.
pub fn nce_oracle(rows: &[Vec<f64>], labels: &[usize], c: usize) -> f64 {
    let n = rows.len() as f64;
    let predicted: Vec<usize> = rows.iter().map(|r| argmax_oracle(r)).collect();
    let mut total = 0.0;
    for j in 0..c {
        let mut p_j = 0.0;
        for i in 0..rows.len() {
            if predicted[i] == j {
                p_j += 1.0 / n;
            }
        }
        if p_j == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for k in 0..c {
            let mut joint = 0.0;
            for i in 0..rows.len() {
                if predicted[i] == j && labels[i] == k {
                    joint += 1.0 / n;
                }
            }
            let cond = joint / p_j;
            if cond > 0.0 {
                inner += cond * cond.ln();
            }
        }
        total += p_j * inner;
    }
    total
}

/// LEEP: `1/N Σ_i log(l_i · P(c_i | ·))` with `P(k|j) = P(k,j) / Σ_k' P(k',j)`.
pub fn leep_oracle(rows: &[Vec<f64>], labels: &[usize], c: usize) -> f64 {
    let n = rows.len() as f64;
    let mut joint = vec![vec![0.0; c]; c]; // [k][j]
    for k in 0..c {
        for j in 0..c {
            for i in 0..rows.len() {
                if labels[i] == k {
                    joint[k][j] += rows[i][j] / n;
                }
            }
        }
    }
    let mut cond = vec![vec![0.0; c]; c];
    for j in 0..c {
        let mut column = 0.0;
        for k in 0..c {
            column += joint[k][j];
        }
        for k in 0..c {
            cond[k][j] = joint[k][j] / column;
        }
    }
    let mut total = 0.0;
    for i in 0..rows.len() {
        let mut dot = 0.0;
        for j in 0..c {
            dot += rows[i][j] * cond[labels[i]][j];
        }
        total += dot.ln();
    }
    total / n
}

/// `ln N(y; 0, β⁻¹I + α⁻¹FFᵀ)` evaluated densely with a Cholesky factor.
pub fn log_evidence_dense(features: &DMatrix<f64>, y: &DVector<f64>, alpha: f64, beta: f64) -> f64 {
    let n = features.nrows();
    let cov = DMatrix::<f64>::identity(n, n) / beta + features * features.transpose() / alpha;
    let chol = cov.cholesky().expect("covariance is positive definite");
    let l = chol.l();
    let log_det: f64 = (0..n).map(|i| 2.0 * l[(i, i)].ln()).sum();
    let solved = chol.solve(y);
    let quad = y.dot(&solved);
    -0.5 * (n as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - 0.5 * quad
}

/// Maximum dense log evidence over a grid on `logspace(-4, 6)²`, refined by
/// successively finer grids around the best cell.
pub fn log_evidence_grid_max(features: &DMatrix<f64>, y: &DVector<f64>) -> (f64, f64, f64) {
    let (mut lo_a, mut hi_a, mut lo_b, mut hi_b) = (-4.0f64, 6.0f64, -4.0f64, 6.0f64);
    let steps = 60;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for _ in 0..6 {
        let da = (hi_a - lo_a) / steps as f64;
        let db = (hi_b - lo_b) / steps as f64;
        for ia in 0..=steps {
            for ib in 0..=steps {
                let la = lo_a + da * ia as f64;
                let lb = lo_b + db * ib as f64;
                let e = log_evidence_dense(features, y, 10f64.powf(la), 10f64.powf(lb));
                if e > best.0 {
                    best = (e, la, lb);
                }
            }
        }
        lo_a = (best.1 - 2.0 * da).max(-4.0);
        hi_a = (best.1 + 2.0 * da).min(6.0);
        lo_b = (best.2 - 2.0 * db).max(-4.0);
        hi_b = (best.2 + 2.0 * db).min(6.0);
    }
    (best.0, 10f64.powf(best.1), 10f64.powf(best.2))
}

/// Weighted Kendall τ by explicit enumeration of all pairs in input order.
pub fn weighted_tau_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut rank = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            let ahead = x[j] > x[i] || (x[j] == x[i] && y[j] > y[i]);
            let tied_before = x[j] == x[i] && y[j] == y[i] && j < i;
            if ahead || tied_before {
                rank[i] += 1;
            }
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let w = 1.0 / (rank[i] as f64 + 1.0) + 1.0 / (rank[j] as f64 + 1.0);
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            let s = if dx == 0.0 || dy == 0.0 {
                0.0
            } else if (dx > 0.0) == (dy > 0.0) {
                1.0
            } else {
                -1.0
            };
            num += w * s;
            den += w;
        }
    }
    num / den
}

/// Log evidence on a grid of precisions, evaluated through the eigenvalues
/// of the N×N Gram matrix `FFᵀ`, so each grid point costs O(N).
pub struct MarginalSpectrum {
    n: usize,
    eigenvalues: Vec<f64>,
    projected: Vec<f64>,
}

impl MarginalSpectrum {
    pub fn new(features: &DMatrix<f64>, y: &DVector<f64>) -> Self {
        let gram = features * features.transpose();
        let eig = gram.symmetric_eigen();
        let projected = eig.eigenvectors.transpose() * y;
        Self {
            n: features.nrows(),
            eigenvalues: eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect(),
            projected: projected.iter().map(|z| z * z).collect(),
        }
    }

    pub fn log_evidence(&self, alpha: f64, beta: f64) -> f64 {
        let mut log_det = 0.0;
        let mut quad = 0.0;
        for (l, z2) in self.eigenvalues.iter().zip(&self.projected) {
            let v = 1.0 / beta + l / alpha;
            log_det += v.ln();
            quad += z2 / v;
        }
        -0.5 * (self.n as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - 0.5 * quad
    }

    /// Same refinement schedule as [`log_evidence_grid_max`].
    pub fn grid_max(&self) -> (f64, f64, f64) {
        let (mut lo_a, mut hi_a, mut lo_b, mut hi_b) = (-4.0f64, 6.0f64, -4.0f64, 6.0f64);
        let steps = 60;
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for _ in 0..6 {
            let da = (hi_a - lo_a) / steps as f64;
            let db = (hi_b - lo_b) / steps as f64;
            for ia in 0..=steps {
                for ib in 0..=steps {
                    let la = lo_a + da * ia as f64;
                    let lb = lo_b + db * ib as f64;
                    let e = self.log_evidence(10f64.powf(la), 10f64.powf(lb));
                    if e > best.0 {
                        best = (e, la, lb);
                    }
                }
            }
            lo_a = (best.1 - 2.0 * da).max(-4.0);
            hi_a = (best.1 + 2.0 * da).min(6.0);
            lo_b = (best.2 - 2.0 * db).max(-4.0);
            hi_b = (best.2 + 2.0 * db).min(6.0);
        }
        (best.0, 10f64.powf(best.1), 10f64.powf(best.2))
    }
}
