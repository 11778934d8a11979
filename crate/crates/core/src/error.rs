use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by model evaluation, fitting and data ingestion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("levels not converged in cutoff (reached {cutoff}, relative change {change:.3e})")]
    CutoffNotConverged { cutoff: usize, change: f64 },

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("fit did not converge after {iterations} iterations (cost {cost:.6e})")]
    NonConvergence { iterations: usize, cost: f64 },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("singular Jacobian: parameter `{0}` has no influence on the residuals")]
    SingularJacobian(String),

    #[error("residual function returned a non-finite value at index {index}")]
    NonFiniteResidual { index: usize },

    #[error("{source_name}:{line}:{column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of an optimizer to reach a minimum.
    pub fn is_fit_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::SingularJacobian(_) | Error::NonFiniteResidual { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
