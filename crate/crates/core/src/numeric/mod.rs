//! Sound numerics on binary64: outward-rounded intervals, interval
//! polynomials, certified polynomial root enclosures, nonnegative bound
//! matrices and the contracting fixpoint solver used by the error model.
//!
//! Rounding is emulated on top of round-to-nearest (see [`rounding`]), so the
//! floating-point environment is never touched and every function is safe to
//! call from any number of threads.

mod fixpoint;
mod interval;
mod nonneg;
mod roots;
pub mod rounding;

pub use fixpoint::{fixpoint_upper_bound, verify_fixpoint, FIXPOINT_ITERATIONS, FIXPOINT_RETRIES};
pub use interval::Interval;
pub use nonneg::{subordinate_inf_norm, NonnegMatrix};
pub use roots::{
    approx_roots, cauchy_lower_bound, certify_roots, enclose_roots, ComplexInterval, IntervalPoly, RootCertificate,
    RootEnclosure, RootMethod,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("interval division by an interval containing zero")]
    DivisionByZeroInterval,
    #[error("square root of an interval with negative part")]
    SqrtOfNegative,
    #[error("root iteration did not converge for a degree-{degree} polynomial (ill-conditioned or clustered roots)")]
    RootsNotConverged { degree: usize },
    #[error("clustered roots: certification failed")]
    ClusteredRoots,
    #[error("polynomial is unsuitable for root finding: {0}")]
    InvalidPolynomial(&'static str),
    #[error("error feedback not contracting: |K1| <= {norm} is not below 1")]
    NotContracting { norm: f64 },
    #[error("fixpoint post-check failed after {retries} widenings")]
    PostCheckFailed { retries: u32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, NumericError>;
