use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Convergence(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] bisim_core::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 argument or config error, 2 convergence failure,
    /// 3 verification failure, 4 I/O error.
    pub fn exit_code(&self) -> i32 {
        use bisim_core::Error as E;
        match self {
            CliError::Config(_) => 1,
            CliError::Convergence(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                E::NotConverged { .. } | E::Diverged { .. } | E::Numerical(_) => 2,
                E::InvalidArgument(_) | E::DimensionMismatch { .. } | E::Parse { .. } => 1,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
