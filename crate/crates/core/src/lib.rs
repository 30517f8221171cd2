//! Estimating how much training data a classifier needs.
//!
//! The pipeline scores a model's evaluation-set predictions with
//! transferability metrics ([`metrics`]), regresses those scores against the
//! number of training observations per class ([`extrapolate`]), and inverts
//! the regressions at near-perfect reference values manufactured by label
//! whitening ([`whitening`]). The [`rfsignal`] and [`classifier`] modules form
//! a small modulation-classification harness that produces prediction sets
//! across a quantity sweep.

pub mod classifier;
pub mod error;
pub mod extrapolate;
pub mod metrics;
pub mod rfsignal;
pub mod rng;
pub mod whitening;

pub use error::{Error, Result};
pub use metrics::{MetricVector, PredictionSet};
