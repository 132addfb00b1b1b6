use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {message}")]
    Record { path: PathBuf, message: String },
    #[error("inputs mix artifact versions {0:?}; pass --force to analyze them together")]
    MixedVersions(Vec<String>),
    #[error("{0}")]
    Family(String),
    #[error("{failed} of {total} jobs failed")]
    JobsFailed { failed: usize, total: usize },
    #[error(transparent)]
    Core(#[from] entcut::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for anything the user can fix in the inputs, 2 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        use entcut::Error as E;
        match self {
            Self::Core(E::Numeric(_) | E::Convergence { .. } | E::Fit(_) | E::Linalg(_) | E::Io(_)) => 2,
            Self::JobsFailed { .. } => 2,
            Self::Io { .. } => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
