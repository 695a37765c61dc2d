use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or discretization invariant does not hold. The message names
    /// the inequality that failed.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("eigensolver did not converge: {converged} of {expected} eigenpairs in window [{lo}, {hi}]")]
    Convergence {
        converged: usize,
        expected: usize,
        lo: f64,
        hi: f64,
    },

    #[error("dimension {dim} exceeds the dense oracle limit {limit}")]
    DimensionGuard { dim: usize, limit: usize },

    #[error("{failed} of {total} seeds failed, above the failure budget {budget}")]
    FailureBudget {
        failed: usize,
        total: usize,
        budget: f64,
    },

    #[error("degenerate decay fit: {0}")]
    DegenerateFit(String),

    #[error("eigen decomposition failed: {0}")]
    Linalg(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invariant<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invariant(msg.into()))
}
