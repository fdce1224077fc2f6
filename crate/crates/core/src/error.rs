use thiserror::Error;

use crate::dual::ConvergenceReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid model or budget parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Inputs with mismatched dimensions or outside an operation's domain.
    #[error("usage error: {0}")]
    Usage(String),

    /// A per-state Lagrangian subproblem has no finite maximum because the
    /// marginal cost of `user` is zero while its direct gain is positive.
    #[error("unbounded per-state subproblem: user {user} has zero marginal power cost")]
    Unbounded { user: usize },

    #[error("per-state solver failed: {reason} (stationarity {stationarity:.3e}, slackness {slackness:.3e})")]
    SolverFailure {
        reason: String,
        stationarity: f64,
        slackness: f64,
    },

    #[error("dual optimization did not converge within {} iterations", .0.iterations.len())]
    Convergence(Box<ConvergenceReport>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
