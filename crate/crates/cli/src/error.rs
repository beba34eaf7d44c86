use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONDITION: i32 = 3;
pub const EXIT_CROSS_CHECK: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("error-correction conditions violated\n{table}")]
    Condition { table: String },
    #[error("cross-check failed: {0}")]
    CrossCheck(String),
    #[error(transparent)]
    Core(#[from] fluxmet_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use fluxmet_core::Error as E;
        match self {
            CliError::Input(_) | CliError::Io { .. } => EXIT_INPUT,
            CliError::Condition { .. } => EXIT_CONDITION,
            CliError::CrossCheck(_) => EXIT_CROSS_CHECK,
            CliError::Core(e) => match e {
                E::Config(_) | E::Domain(_) | E::Dimension(_) | E::Distribution(_) => EXIT_INPUT,
                E::CodeCondition { .. }
                | E::Orthogonality { .. }
                | E::DegenerateError { .. }
                | E::NonIsotropic { .. } => EXIT_CONDITION,
                _ => EXIT_CROSS_CHECK,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
