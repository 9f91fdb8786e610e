use thiserror::Error;

/// Failure classes of a run, each with its own process exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(hyperadams_core::Error),
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

// not `#[from]`: the message already carries the cause, so no source chain
impl From<hyperadams_core::Error> for RunError {
    fn from(e: hyperadams_core::Error) -> Self {
        Self::Numerical(e)
    }
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 2,
            Self::Numerical(_) => 3,
            Self::NonConvergence(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;
