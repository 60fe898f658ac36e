use std::path::PathBuf;

use thiserror::Error;

/// Exit status for configuration problems.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when a run loses a conserved quantity or the exponential
/// cannot be formed.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("cannot read config file {path}: {source}")]
    ConfigFile {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config file {path}: {source}")]
    ConfigParse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] zeno_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        use zeno_core::Error as E;
        match self {
            CliError::Config(_) | CliError::ConfigFile { .. } | CliError::ConfigParse { .. } => {
                EXIT_CONFIG
            }
            CliError::Core(
                E::InvalidParameter { .. } | E::InvalidSchedule(_) | E::InvalidDensity { .. },
            ) => EXIT_CONFIG,
            CliError::Core(
                E::InvariantBreach { .. } | E::NormOverflow { .. } | E::SubdivisionLimit { .. },
            ) => EXIT_NUMERICAL,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
