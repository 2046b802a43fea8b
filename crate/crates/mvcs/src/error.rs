//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by simplex, geometry, and certification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inputs disagree on the number of categories.
    #[error("dimension mismatch: expected {expected} categories, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Counts do not sum to the stated sample size, or are empty.
    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    /// A probability vector is not on the simplex.
    #[error("not on simplex: {0}")]
    NotOnSimplex(String),

    /// An interior-only operation was handed a point with a zero coordinate.
    #[error("boundary point: coordinate {index} is not strictly positive")]
    BoundaryPoint { index: usize },

    /// The discrete simplex (or candidate enumeration) exceeds the configured cap.
    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    /// An iterative solver did not converge within its budget.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// Vertex maximization was asked for a polyhedron with no vertices.
    #[error("empty vertex list")]
    EmptyVertexList,

    /// The orthogonality-condition solver produced no candidate points.
    #[error("no orthogonality candidates for the requested variety")]
    NoCandidates,

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Filesystem or serialization problem in the enumeration cache.
    #[error("cache error: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
