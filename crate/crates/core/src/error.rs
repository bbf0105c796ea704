use core::fmt;

/// Errors raised by the solvers and kernels.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible.
    DimensionMismatch { expected: usize, found: usize },
    /// A matrix with a zero dimension was supplied.
    EmptyMatrix,
    /// A diagonal weight was zero, negative or not finite.
    NonPositiveWeight { index: usize },
    /// Cholesky factorization met a non-positive pivot.
    SingularSystem { pivot: usize },
    /// An iterate contained NaN or infinity.
    NonFinite { iteration: usize },
    /// A configuration field is outside its admissible range.
    InvalidConfig(&'static str),
    /// Requested selection size is outside `1..=n`.
    InvalidK { k: usize, n: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::EmptyMatrix => f.write_str("matrix has a zero dimension"),
            Error::NonPositiveWeight { index } => {
                write!(f, "diagonal weight {index} is not strictly positive")
            }
            Error::SingularSystem { pivot } => {
                write!(f, "singular system: non-positive pivot at {pivot}")
            }
            Error::NonFinite { iteration } => {
                write!(f, "non-finite iterate at iteration {iteration}")
            }
            Error::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
            Error::InvalidK { k, n } => write!(f, "k = {k} is outside 1..={n}"),
        }
    }
}

impl core::error::Error for Error {}
