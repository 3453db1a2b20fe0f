use thiserror::Error;

/// Failures of a CLI run, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input, bad configuration or an unknown name: exit 2.
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
    /// The computation itself failed: exit 1.
    #[error(transparent)]
    Compute(#[from] yamabe_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Compute(_) => 1,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "USAGE",
            CliError::Io(_) => "IO",
            CliError::Compute(e) => e.code(),
        }
    }
}
