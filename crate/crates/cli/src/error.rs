use std::path::Path;

/// Failure of a subcommand, split by exit status: bad input (2) versus a
/// failure while doing the work (3).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0:#}")]
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn runtime(msg: impl std::fmt::Display) -> Self {
        CliError::Runtime(anyhow::anyhow!("{msg}"))
    }

    /// Prefixes the message with the file it concerns.
    pub fn at(self, path: &Path) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            CliError::Runtime(e) => CliError::Runtime(e.context(path.display().to_string())),
        }
    }
}

impl From<dataneeds::Error> for CliError {
    fn from(e: dataneeds::Error) -> Self {
        use dataneeds::Error as E;
        match e {
            E::InvalidInput(_)
            | E::Parse { .. }
            | E::InsufficientData { .. }
            | E::UnboundedNoise { .. }
            | E::NonFinite(_) => CliError::Validation(e.to_string()),
            E::Io(io) => io.into(),
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;
