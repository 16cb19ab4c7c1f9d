//! Arithmetic substrate: exact rationals, dyadic intervals and radical
//! expression trees with certified comparisons.
//!
//! Every value of interest is a [`RealScalar`]: an expression tree over
//! rationals, the four field operations and square roots, paired with an
//! outward-rounded dyadic interval enclosure that can be refined to any
//! precision. Values that happen to be rational keep their exact
//! representation and never go through the interval machinery.

mod dyadic;
mod rational;
mod real;

pub use dyadic::{Dyadic, DyadicInterval};
pub use rational::{ParseRationalError, Rational};
pub use real::{Cmp, RealScalar, DEFAULT_MAX_BITS, DEFAULT_WORKING_BITS, TAU_EQ_EXP};

use thiserror::Error;

/// Errors raised by certified real arithmetic.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NumericError {
    /// Division by a value that is exactly zero.
    #[error("division by exact zero")]
    DivisionByZero,
    /// A sign decision was required but the enclosure still straddles zero at
    /// the configured maximum precision.
    #[error("sign of `{context}` undecidable at {max_bits} bits")]
    AmbiguousSign { context: String, max_bits: u32 },
    /// Square root of a value certified negative.
    #[error("square root of negative value `{context}`")]
    NegativeRadicand { context: String },
}
