//! Exact arithmetic over the rationals, univariate polynomials and the ring
//! of causal rational functions (denominator with nonzero constant term).
//!
//! Everything here is exact. Floating-point enters only in [`crate::numeric`].

mod matrix;
mod poly;
mod rat;
mod ratfun;

pub use matrix::{determinant, invert_id_minus_z_a, solve_linear_system, RatFunMatrix};
pub use poly::Poly;
pub use rat::{parse_rat, rat_bits, rat_checked_div, rat_from_f64, Rat};
pub use ratfun::RatFun;

use thiserror::Error;

/// Largest polynomial degree accepted by rational-function operations.
pub const DEFAULT_DEGREE_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("polynomial division by the zero polynomial")]
    ZeroPolynomialDivisor,
    #[error("result is not causal: denominator vanishes at z = 0")]
    NotCausal,
    #[error("degree {degree} exceeds the cap of {cap}")]
    DegreeTooLarge { degree: usize, cap: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("linear system has no unique solution")]
    Singular,
    #[error("linear system solution is not causal")]
    NonCausalSystem,
    #[error("cannot parse rational `{0}`")]
    BadRational(String),
}

pub type Result<T> = std::result::Result<T, AlgebraError>;
