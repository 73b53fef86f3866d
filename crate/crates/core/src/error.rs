use thiserror::Error;

/// Errors raised by the enclosure library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },

    /// Evaluation hit a pole or produced a non-finite value.
    #[error("domain violation: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Skeleton and slashed-boundary queries are only defined for plain boxes.
    #[error("skeleton queries need a box region without scalar constraints")]
    SkeletonUnavailable,

    /// A branch-specific membership routine was called at a point of the other branch.
    #[error("wrong degeneracy branch: {0}")]
    WrongBranch(String),

    #[error(
        "envelope interval [{env_lo}, {env_hi}] does not cover axis {axis} = [{box_lo}, {box_hi}]"
    )]
    IntervalMismatch {
        axis: usize,
        env_lo: f64,
        env_hi: f64,
        box_lo: f64,
        box_hi: f64,
    },

    #[error("expression is not a polynomial in w: {0}")]
    NotPolynomial(String),

    #[error("zero polynomial has no isolated roots")]
    ZeroPolynomial,

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Format(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
