use std::path::PathBuf;

use peakon_core::PeakonError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("scenario error: {0}")]
    Schema(String),
    #[error("invalid input: {0}")]
    Invariant(PeakonError),
    #[error("integration failed: {0}")]
    Integrator(PeakonError),
    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0} check(s) failed")]
    CheckFailed(usize),
}

impl CliError {
    /// Process exit status: 1 failed checks, 2 schema, 3 invariant,
    /// 4 integrator, 5 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Schema(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Integrator(_) => 4,
            CliError::Io { .. } => 5,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<PeakonError> for CliError {
    fn from(e: PeakonError) -> Self {
        match e {
            PeakonError::StepSize(_)
            | PeakonError::OrderingLost { .. }
            | PeakonError::Quadrature { .. }
            | PeakonError::Unsupported(_) => CliError::Integrator(e),
            _ => CliError::Invariant(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
