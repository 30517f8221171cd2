//! Desk-scale classifier harness: hand features over IQ observations, a
//! linear softmax model, and ingestion of externally produced scores.

mod features;
mod logits;
mod softmax;

pub use features::{extract_all, extract_features, FeatureVector, FEATURE_DIM, FEATURE_NAMES};
pub use logits::{ingest_logits, read_logits, softmax_row, write_logits, ScoreKind};
pub use softmax::{evaluate, evaluate_features, train, LabeledFeatures, SoftmaxModel, TrainConfig, TrainMeta};
