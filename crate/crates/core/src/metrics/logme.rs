//! Logarithm of maximum evidence.
//!
//! For each class `k` the one-vs-rest indicator `y_k` is modelled as a Bayesian
//! linear regression on the feature matrix `F` (here the probability rows),
//! with prior precision `α` and noise precision `β`. The evidence is maximized
//! with MacKay's fixed point, evaluated in the eigenbasis of `FᵀF` so each
//! iteration costs `O(D)`:
//!
//! ```text
//! A = αI + βFᵀF,  m = βA⁻¹Fᵀy,  γ̃ = Σ_d βs_d / (α + βs_d)
//! α ← γ̃ / mᵀm,   β ← (N − γ̃) / ‖Fm − y‖²
//! ```

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::PredictionSet;
use crate::error::{Error, Result};

/// Upper bound on either precision. Separable problems drive `β` (and empty
/// classes drive `α`) to infinity; hitting the cap marks the class saturated.
pub const BETA_CAP: f64 = 1e12;
pub const LOGME_MAX_ITERATIONS: usize = 100;
/// Convergence threshold on the change of the (un-normalized) log evidence.
pub const LOGME_TOLERANCE: f64 = 1e-6;
/// Relative change of `α` and `β` also required for convergence, so the
/// reported evidence sits at the optimum to near machine precision.
pub const LOGME_PARAM_TOLERANCE: f64 = 1e-8;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidenceParams {
    pub alpha: f64,
    pub beta: f64,
    /// `ln p(y_k | F, α, β)`, not normalized by `N`.
    pub log_evidence: f64,
    /// Effective number of well-determined parameters `γ̃` at `(α, β)`.
    pub effective_params: f64,
    /// `mᵀm` of the posterior mean weights.
    pub weight_norm2: f64,
    /// `‖Fm − y‖²`.
    pub residual_norm2: f64,
    pub iterations_used: usize,
    /// A precision reached [`BETA_CAP`].
    pub saturated: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogMe {
    /// `1/(N·C) Σ_k ln p(y_k | F, α_k, β_k)`.
    pub score: f64,
    pub per_class: Vec<EvidenceParams>,
}

impl LogMe {
    pub fn saturated(&self) -> bool {
        self.per_class.iter().any(|p| p.saturated)
    }
}

/// Spectral summary of `F` shared by every class.
pub(crate) struct Spectrum {
    n: usize,
    /// Eigenvalues of `FᵀF` (squared singular values of `F`).
    s: Vec<f64>,
    vectors: DMatrix<f64>,
    features: DMatrix<f64>,
    rank_floor: f64,
}

/// Per-class projections of the target onto the spectrum.
pub(crate) struct Projection {
    /// `(v_dᵀ Fᵀ y)²` per eigen-direction.
    z2: Vec<f64>,
    /// Squared norm of the part of `y` outside the column space of `F`.
    residual_perp: f64,
}

/// Quantities of the evidence at a given `(α, β)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EvidenceState {
    pub gamma: f64,
    pub m_norm2: f64,
    pub residual2: f64,
    pub log_evidence: f64,
}

impl Spectrum {
    pub(crate) fn new(features: DMatrix<f64>) -> Result<Self> {
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LogME features"));
        }
        let gram = features.transpose() * &features;
        let eig = SymmetricEigen::new(gram);
        let s: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
        let max_s = s.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            n: features.nrows(),
            s,
            vectors: eig.eigenvectors,
            features,
            rank_floor: max_s * 1e-12,
        })
    }

    pub(crate) fn project(&self, y: &DVector<f64>) -> Projection {
        let fty = self.features.transpose() * y;
        let z = self.vectors.transpose() * &fty;
        // y_perp = y - F (FᵀF)⁺ Fᵀy, computed directly to avoid cancellation.
        let mut coef = DVector::zeros(self.s.len());
        for (d, &s) in self.s.iter().enumerate() {
            if s > self.rank_floor {
                coef[d] = z[d] / s;
            }
        }
        let fitted = &self.features * (&self.vectors * coef);
        let residual_perp = (y - fitted).norm_squared();
        Projection {
            z2: z.iter().map(|v| v * v).collect(),
            residual_perp,
        }
    }

    pub(crate) fn state(&self, proj: &Projection, alpha: f64, beta: f64) -> EvidenceState {
        let n = self.n as f64;
        let dims = self.s.len() as f64;
        let mut gamma = 0.0;
        let mut m_norm2 = 0.0;
        let mut residual2 = proj.residual_perp;
        let mut log_det = 0.0;
        for (&s, &z2) in self.s.iter().zip(&proj.z2) {
            let denom = alpha + beta * s;
            log_det += denom.ln();
            if s <= self.rank_floor {
                continue;
            }
            gamma += beta * s / denom;
            m_norm2 += beta * beta * z2 / (denom * denom);
            // ‖Fm − y‖² in the column space: (α / (α + βs))² · z² / s.
            let shrink = alpha / denom;
            residual2 += shrink * shrink * z2 / s;
        }
        let log_evidence = 0.5 * dims * alpha.ln() + 0.5 * n * beta.ln()
            - 0.5 * log_det
            - 0.5 * beta * residual2
            - 0.5 * alpha * m_norm2
            - 0.5 * n * LN_2PI;
        EvidenceState {
            gamma,
            m_norm2,
            residual2,
            log_evidence,
        }
    }

    pub(crate) fn maximize(&self, proj: &Projection) -> EvidenceParams {
        let n = self.n as f64;
        let (mut alpha, mut beta) = (1.0_f64, 1.0_f64);
        let mut converged = false;
        let mut previous: Option<(f64, f64, f64)> = None;
        let mut iterations_used = 0;

        for it in 1..=LOGME_MAX_ITERATIONS {
            iterations_used = it;
            let st = self.state(proj, alpha, beta);
            if let Some((prev_e, prev_a, prev_b)) = previous {
                let settled = |new: f64, old: f64| (new - old).abs() <= LOGME_PARAM_TOLERANCE * old;
                if (st.log_evidence - prev_e).abs() < LOGME_TOLERANCE
                    && settled(alpha, prev_a)
                    && settled(beta, prev_b)
                {
                    converged = true;
                    break;
                }
            }
            previous = Some((st.log_evidence, alpha, beta));

            alpha = if st.m_norm2 > 0.0 { st.gamma / st.m_norm2 } else { f64::INFINITY };
            beta = if st.residual2 > 0.0 {
                (n - st.gamma) / st.residual2
            } else {
                f64::INFINITY
            };
            alpha = alpha.min(BETA_CAP);
            beta = beta.min(BETA_CAP);
        }

        let last = self.state(proj, alpha, beta);
        EvidenceParams {
            alpha,
            beta,
            log_evidence: last.log_evidence,
            effective_params: last.gamma,
            weight_norm2: last.m_norm2,
            residual_norm2: last.residual2,
            iterations_used,
            saturated: alpha >= BETA_CAP || beta >= BETA_CAP,
            converged,
        }
    }
}

/// One-vs-rest indicator targets for every class.
pub(crate) fn class_targets(pred: &PredictionSet) -> Vec<DVector<f64>> {
    (0..pred.n_classes())
        .map(|k| {
            DVector::from_iterator(
                pred.len(),
                pred.labels().iter().map(|&c| if c == k { 1.0 } else { 0.0 }),
            )
        })
        .collect()
}

pub(crate) fn feature_matrix(pred: &PredictionSet) -> DMatrix<f64> {
    DMatrix::from_row_slice(pred.len(), pred.n_classes(), pred.probs())
}

/// LogME with the probability rows as features.
pub fn logme(pred: &PredictionSet) -> Result<LogMe> {
    let spectrum = Spectrum::new(feature_matrix(pred))?;
    let per_class: Vec<EvidenceParams> = class_targets(pred)
        .iter()
        .map(|y| spectrum.maximize(&spectrum.project(y)))
        .collect();
    let total: f64 = per_class.iter().map(|p| p.log_evidence).sum();
    Ok(LogMe {
        score: total / (pred.len() * pred.n_classes()) as f64,
        per_class,
    })
}
