//! Error types shared across the library.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor parameter lies outside its admissible domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested kernel is degenerate (zero second moment, all-zero
    /// series, vanishing normalization).
    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    /// A numeric evaluation failed (non-finite values, quadrature that does
    /// not settle, eigen-decomposition trouble).
    #[error("numeric evaluation failed: {0}")]
    NumericFailure(String),

    /// The regularity expansion is not detectable: the linearization
    /// residual sits below the absolute floor across the whole fit grid.
    #[error("regularity expansion not detectable: residual below {floor:e} on the entire fit grid")]
    AssumptionNotDetectable { floor: f64 },

    /// The fitted expansion contradicts the regime (e.g. non-positive
    /// leading coefficient for a kernel with unit derivative at 1).
    #[error("inconsistent regularity fit: {0}")]
    InconsistentFit(String),

    /// No fixed point of the kernel was bracketed in [0, 1).
    #[error("fixed point not found: {0}")]
    FixedPointNotFound(String),

    /// Invalid run configuration or point configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A covariance matrix is not usable (indefinite beyond the jitter
    /// budget, Cholesky failure).
    #[error("covariance error: {0}")]
    Covariance(String),

    /// A profile did not converge where convergence is required.
    #[error("profile not converged: {0}")]
    NonConverged(String),

    /// The operation is not defined in the kernel's regime.
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    /// Underlying I/O failure (CLI and report emission paths).
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
