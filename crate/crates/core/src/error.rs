use thiserror::Error;

/// Errors produced by the steering toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated one of its documented invariants.
    #[error("invalid input: {0}")]
    Validation(String),

    /// The operation requires a normal state but Bob's marginal is pure.
    #[error("state is abnormal (Bob's reduced state is pure, purity gap {gap:.3e}); use abnormal_radius instead")]
    Abnormal { gap: f64 },

    /// The correlation map is not invertible.
    #[error("state is degenerate (smallest canonical singular value {min_singular:.3e}); degenerate states are separable and need no linear program")]
    Degenerate { min_singular: f64 },

    /// Unknown polytope name.
    #[error("unknown polytope '{name}'; available: {available}")]
    UnknownPolytope { name: String, available: String },

    /// Vertex set does not span three dimensions or its hull misses the origin.
    #[error("degenerate vertex set: {0}")]
    DegenerateGeometry(String),

    /// Ensemble weights do not satisfy the normalisation / barycenter constraints.
    #[error("weights violate the minimal requirement: {0}")]
    MinimalRequirement(String),

    /// The linear program could not be solved to the requested accuracy.
    #[error("linear program failed: {0}")]
    Solver(String),

    /// A bisection bracket was inconsistent.
    #[error("bisection failed: {0}")]
    Bisection(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
