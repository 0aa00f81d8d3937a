use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point is not strictly interior to the barrier domain")]
    NotInterior,

    #[error("analytic center computation did not converge within {max_iter} iterations (decrement {decrement:.3e})")]
    CenterNonConvergence { max_iter: usize, decrement: f64 },

    #[error("subproblem for component {component} failed: {reason}")]
    Subproblem { component: usize, reason: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("fast solver entry condition violated: |grad| = {lambda:.6e} > (3/4) c_hat = {threshold:.6e}")]
    EntryCondition { lambda: f64, threshold: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("problem file parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("malformed trace csv: {0}")]
    TraceFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
