use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration or argument violates its documented contract.
    InvalidConfig(String),
    /// Two inputs that must agree in length or shape do not.
    ShapeMismatch { expected: usize, found: usize },
    /// An operation that needs at least one element received none.
    Empty(&'static str),
    /// A forward pass, gradient or update produced a NaN or infinity.
    NumericalOverflow,
    /// `JᵀJ` could not be factorized even after adding the ridge.
    DegenerateJacobian,
    /// A matrix expected to be positive definite is not; carries the smallest eigenvalue.
    NotPositiveDefinite { min_eigenvalue: f64 },
    /// A feature column has zero variance and cannot be standardized.
    ZeroVariance { column: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::ShapeMismatch { expected, found } => {
                write!(f, "shape mismatch: expected {expected}, found {found}")
            }
            Error::Empty(what) => write!(f, "empty input: {what}"),
            Error::NumericalOverflow => f.write_str("numerical overflow"),
            Error::DegenerateJacobian => f.write_str("degenerate Jacobian"),
            Error::NotPositiveDefinite { min_eigenvalue } => {
                write!(f, "matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")
            }
            Error::ZeroVariance { column } => {
                write!(f, "column {column} has zero variance and cannot be standardized")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, found })
    }
}
