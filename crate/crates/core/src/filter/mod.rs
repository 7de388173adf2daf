//! The abstract domain of filters.
//!
//! An [`AbstractFilter`] pairs the exact (ideal) transfer matrices `T`, `D`
//! of a linear filter with an affine envelope of its rounding error:
//! for inputs `I` and reset values `R`,
//! `|F(I, R) - F~(I, R)| <= eps_rel_t N(I) + eps_rel_d |R| + eps_abs`
//! coordinate-wise, `N(I)` being the vector of sup norms of the input
//! streams and `F~` the filter as executed in the chosen number format.

mod abstract_filter;
mod block;
mod format;
mod network;
mod norms;
mod output;
mod quantize;
pub mod sim;

pub use abstract_filter::{
    closed_loop_error, compose_feedback, compose_parallel, compose_serial, make_basic, make_constant_source, AbstractFilter,
    Basic, ResetSlot, SlotKind,
};
pub use block::{AbstractOptions, Block};
pub use format::{FloatFormat, FormatKind};
pub use network::{EquationSystem, Operand, Source, Term};
pub use norms::{l1_matrix, linf_matrix};
pub use output::{output_bound, OutputBound, ResetEnv, SlotBinding};
pub use quantize::{quantize, quantize_ratfun, DEFAULT_QUANTIZE_BITS};

use thiserror::Error;

use crate::algebra::AlgebraError;
use crate::numeric::NumericError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("floating-point feedback not contracting: |K1| <= {norm} is not below 1")]
    NotContracting { norm: f64 },
    #[error("non-causal loop: {0}")]
    NonCausalLoop(String),
    #[error("unknown number format `{0}` (expected ieee64, ieee32, exact or fixed:<delta>[:rne])")]
    BadFormat(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Numeric(NumericError),
}

impl From<NumericError> for FilterError {
    fn from(e: NumericError) -> Self {
        match e {
            NumericError::NotContracting { norm } => FilterError::NotContracting { norm },
            other => FilterError::Numeric(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, FilterError>;
