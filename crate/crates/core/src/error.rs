//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A point failed the domain membership test.
    #[error("domain violation on {domain}: {reason}")]
    DomainViolation { domain: String, reason: String },

    /// An optimizer step produced a NaN or infinite component.
    #[error("optimizer step produced a non-finite iterate")]
    NonFiniteIterate,

    /// The proximal subproblem solver did not reach its residual tolerance.
    #[error("inner solve failed: residual {residual:.3e} after {iters} iterations (tolerance {tol:.1e})")]
    InnerSolveFailure { residual: f64, iters: usize, tol: f64 },

    /// Manifold retraction received a vector too short to normalize.
    #[error("cannot retract: candidate vector has norm below 1e-14")]
    ZeroProjection,

    /// A dense linear solve hit a numerically singular matrix.
    #[error("singular matrix in linear solve (likely alpha at or above 1/L)")]
    SingularMatrix,

    /// A fixed-point-only differential formula was requested away from a fixed point.
    #[error("not a fixed point: Riemannian gradient norm {grad_norm:.3e} exceeds {tol:.1e}")]
    NotAFixedPoint { grad_norm: f64, tol: f64 },

    /// The dense nonsymmetric eigensolver did not converge.
    #[error("eigensolver failed to converge")]
    EigensolverFailure,

    /// Rayleigh fixture construction requires well-separated eigenvalues.
    #[error("repeated eigenvalues: smallest gap {gap:.3e} below 1e-8")]
    RepeatedEigenvalues { gap: f64 },

    /// Simplex fixture construction requires equal row sums.
    #[error("row sums differ by {spread:.3e}, more than 1e-10")]
    RowSumMismatch { spread: f64 },

    /// A block partition does not partition the coordinate indices.
    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    /// The optimizer method is not defined on the problem's domain.
    #[error("method {method} is not defined on domain {domain}")]
    MethodDomainMismatch { method: String, domain: String },

    /// Invalid configuration (bad fixture name, non-positive step size, ...).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
