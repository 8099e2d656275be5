use thiserror::Error;

use crate::pagerank::SolveStats;

/// Best iterate retained when an iterative solve hits its update cap.
#[derive(Debug, Clone)]
pub struct PartialSolve {
    pub iterate: Vec<f64>,
    pub stats: SolveStats,
}

#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative routine stopped at its cap before reaching the tolerance.
    #[error("{routine} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        routine: &'static str,
        iterations: u64,
        residual: f64,
        partial: Option<Box<PartialSolve>>,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// Whether this error reports a hit iteration cap.
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::Convergence { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
