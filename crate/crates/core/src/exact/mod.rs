//! Exact arithmetic substrate: rationals, dense rational matrices and sparse
//! Laurent polynomials. No floating point is used anywhere in the crate.

mod laurent;
mod matrix;
mod rational;

pub use laurent::{parse_expression, Exponents, LaurentPoly, MonomialImage, Term};
pub(crate) use matrix::{bareiss_rank, rank_mod_p, to_mod_p};
pub use matrix::{is_zero_vec, normalize_leading, QMatrix, Rref};
pub use rational::{q, qvec, Rational};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),
    #[error("cannot parse expression {input:?}: {reason}")]
    ParseExpression { input: String, reason: String },
    #[error("rows have different lengths")]
    Ragged,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is {rows}x{cols}, not square")]
    NotSquare { rows: usize, cols: usize },
    #[error("variable lists differ: {left:?} vs {right:?}")]
    VariableMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("no image given for variable {0:?}")]
    MissingImage(String),
    #[error("image of variable {0:?} has zero coefficient")]
    ZeroImage(String),
    #[error("negative exponent where a polynomial is required")]
    NegativeExponent,
    #[error("multiplicity must be at least 1, got {0}")]
    InvalidMultiplicity(u32),
}
