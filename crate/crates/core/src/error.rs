use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("degenerate body: {0}")]
    DegenerateBody(String),

    #[error("ill-conditioned coefficient extraction: {detail} (spurious coefficient ratio {ratio:.3e})")]
    NumericConditioning { detail: String, ratio: f64 },

    #[error("invalid mixed index {entries:?} in dimension {dim}: {reason}")]
    InvalidIndex {
        entries: Vec<usize>,
        dim: usize,
        reason: String,
    },

    #[error("precision failure: estimate {estimate:.6e} with error estimate {error:.3e}")]
    PrecisionFailure { estimate: f64, error: f64 },

    #[error("invalid grain model: {0}")]
    InvalidModel(String),

    #[error("subset budget of {budget} intersections exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("infeasible density: volume fraction {0} is not in [0, 1)")]
    InfeasibleDensity(f64),

    #[error("ill-posed inversion: {nullity} unresolved directions (grid indices {missing:?}), condition {condition:.3e}")]
    IllPosed {
        missing: Vec<usize>,
        nullity: usize,
        condition: f64,
        /// Minimum-norm solution restricted to the identifiable subspace.
        partial: Option<Vec<f64>>,
    },

    #[error("infeasible measure: {0}")]
    InfeasibleMeasure(String),

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
