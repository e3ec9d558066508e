//! Error types shared across the crate.

use thiserror::Error;

/// Coarse failure class, used by callers (e.g. the CLI) to map errors onto
/// exit codes without matching every variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Bad argument, index out of range, unmet precondition.
    InvalidInput,
    /// Problem size exceeds a hard enumeration/dimension guard.
    SizeGuard,
    /// Numerical failure: non-convergence, singular matrix, infeasibility.
    Numeric,
}

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("{0}")]
    InvalidInput(String),
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CoreError {
    pub fn kind(&self) -> FailureKind {
        match self {
            CoreError::InvalidInput(_) => FailureKind::InvalidInput,
            CoreError::SizeGuard(_) => FailureKind::SizeGuard,
            CoreError::Numeric(_) => FailureKind::Numeric,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidInput(msg.into())
    }

    pub fn guard(msg: impl Into<String>) -> Self {
        CoreError::SizeGuard(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        CoreError::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
