use thiserror::Error;

/// Unified error type for the geometry and estimator layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate Moebius map: |det| = {det:.3e} below threshold")]
    DegenerateMap { det: f64 },

    #[error("point violates model invariant: {0}")]
    InvalidPoint(String),

    #[error("boundary point too far from the circle: |z| = {0}")]
    InvalidBoundary(f64),

    #[error("map does not preserve the requested model: {0}")]
    NotAnIsometry(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("fundamental-domain reduction exceeded {0} steps")]
    ReductionFailure(usize),

    #[error("group relator does not evaluate to the identity (residual {0:.3e})")]
    RelatorViolation(f64),

    #[error("no valid contraction found for the candidate words")]
    EmptySystem,

    #[error("missing prerequisite estimate: {0}")]
    Dependency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
