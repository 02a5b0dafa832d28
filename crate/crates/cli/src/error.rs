use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Convergence(String),

    #[error("{0}")]
    Singular(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 input error, 3 convergence failure, 4 numerical singularity.
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Input(_) | Self::Io { .. } => 2,
            Self::Convergence(_) => 3,
            Self::Singular(_) => 4,
        })
    }
}

impl From<symfit::Error> for CliError {
    fn from(e: symfit::Error) -> Self {
        match e {
            symfit::Error::Singular { .. } => Self::Singular(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
