use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid anisotropy vector: {0}")]
    InvalidAnisotropy(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid sector: {0}")]
    InvalidSector(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("zero denominator in randomized sum (all vectors vanish)")]
    ZeroDenominator,

    #[error("tuple size {n} exceeds the enumeration cap {cap}")]
    TooManyTerms { n: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("derivative of order {order} unavailable (cap {cap})")]
    DerivativeUnavailable { order: usize, cap: usize },

    #[error("finite-difference step underflow at scale {scale:e}")]
    StepUnderflow { scale: f64 },

    #[error("homogeneous extension undefined at the origin")]
    Origin,

    #[error("excision parameter theta = {0} must be >= 1")]
    ThetaBelowOne(f64),

    #[error("theta search for term {term} did not terminate within {iterations} iterations")]
    ThetaSearchFailed { term: usize, iterations: usize },

    #[error("ill-conditioned principal symbol (condition number {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("remainder order not improving: measured {measured:.3}, required <= {required:.3}")]
    RemainderNotImproving { measured: f64, required: f64 },

    #[error("divisibility violated: s = {s} is not divisible by anisotropy entry {entry}")]
    Divisibility { s: u32, entry: u32 },

    #[error("lattice coverage check failed: edge/peak ratio {ratio:e} > {tol:e}")]
    Coverage { ratio: f64, tol: f64 },

    #[error("membership check failed: {0}")]
    Membership(String),

    #[error("eigenvalue solver failed")]
    EigenFailure,

    #[error("remainder norm {norm:.3e} >= 1 at lambda = {lambda}")]
    RemainderTooLarge { lambda: Complex64, norm: f64 },

    #[error("A - lambda is not invertible on the grid at lambda = {lambda}")]
    NotInvertible { lambda: Complex64 },

    #[error("unstable mode: eigenvalue {eigenvalue} of the shifted operator has real part >= {margin:e}")]
    UnstableMode { eigenvalue: Complex64, margin: f64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
