use std::path::Path;

/// Failure of a CLI invocation. [`CliError::exit_code`] maps invalid input
/// to 2 and everything else to 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid spec {origin}: {reason}")]
    Spec { origin: String, reason: String },

    #[error("{0}")]
    Gallery(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error(transparent)]
    Run(#[from] disteval::Error),

    #[error("{0} check(s) failed")]
    Verify(usize),
}

impl CliError {
    pub fn spec(origin: impl Into<String>, reason: impl ToString) -> Self {
        Self::Spec { origin: origin.into(), reason: reason.to_string() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Spec { .. } | Self::Gallery(_) => 2,
            _ => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Run(disteval::Error::Csv(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
