use thiserror::Error;

/// Errors raised by the geometry, potential and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CcError {
    #[error("dimension mismatch: expected {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("collision between bodies {i} and {j} (distance {distance:e})")]
    Collision { i: usize, j: usize, distance: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid mass system: {0}")]
    InvalidSystem(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("fixed point index undefined at a degenerate critical point")]
    UndefinedIndex,

    #[error("analytic and numeric differentials disagree by {deviation:e} (limit {limit:e})")]
    InternalConsistency { deviation: f64, limit: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, CcError>;
