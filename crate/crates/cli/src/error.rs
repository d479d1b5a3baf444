use std::path::PathBuf;

use hps_core::HpsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed output file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Solver(#[from] HpsError),

    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub const EXIT_CONFIG: i32 = 2;
    pub const EXIT_NUMERIC: i32 = 3;
    pub const EXIT_IO: i32 = 4;

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for anything the user can fix in the
    /// configuration, 3 for numerical failures, 4 for file system errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => Self::EXIT_CONFIG,
            Self::Io { .. } | Self::Format { .. } => Self::EXIT_IO,
            Self::CheckFailed(_) => Self::EXIT_NUMERIC,
            Self::Solver(e) => match e {
                HpsError::InvalidDomain(_)
                | HpsError::InvalidMesh(_)
                | HpsError::OrderTooSmall { .. }
                | HpsError::CrossTermsRequireLegendre
                | HpsError::UndeclaredCrossTerms { .. }
                | HpsError::BudgetTooSmall { .. }
                | HpsError::OracleCapExceeded { .. }
                | HpsError::InvalidParameterMap(_)
                | HpsError::InvalidProblem(_)
                | HpsError::InvalidTimeStep(_) => Self::EXIT_CONFIG,
                _ => Self::EXIT_NUMERIC,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
