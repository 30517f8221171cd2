use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A computation reached a degenerate configuration (zero variance,
    /// identical quantities, zero probability mass, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The requested accuracy degradation is at or beyond chance level, so no
    /// finite noise level produces it.
    #[error("epsilon {epsilon} is at or beyond chance level for {classes} classes; noise would be unbounded")]
    UnboundedNoise { epsilon: f64, classes: usize },

    /// A flat fit whose target has already been reached.
    #[error("target {target} is already reached by a flat fit (intercept {intercept})")]
    AlreadyAchieved { target: f64, intercept: f64 },

    #[error("insufficient data for class {class}: need {needed}, have {available}")]
    InsufficientData {
        class: usize,
        needed: usize,
        available: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
