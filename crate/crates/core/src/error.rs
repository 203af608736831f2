use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index out of range: component {index} (1-based) is not in [1, {dimension}]")]
    IndexOutOfRange { index: usize, dimension: usize },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from ({col}, {row})")]
    Asymmetric { row: usize, col: usize },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid mixing probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("multi-index has repeated component {index} (1-based); distinct entries required")]
    RepeatedIndex { index: usize },

    #[error("position set of odd size {len} has no pairings")]
    OddPositionSet { len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("quadrature failed to converge after {intervals} intervals (error estimate {error_estimate:e})")]
    QuadratureFailure { intervals: usize, error_estimate: f64 },

    #[error("mixing distribution given only through a moment oracle cannot be sampled")]
    UnsupportedSampling,

    #[error("rejection sampler acceptance probability {acceptance:e} is below 1e-3; review the GIG parameters")]
    PoorAcceptance { acceptance: f64 },

    #[error("determinant check failed: det Δ = {det} but |det Δ - 1| must be <= {tolerance:e}")]
    Determinant { det: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
