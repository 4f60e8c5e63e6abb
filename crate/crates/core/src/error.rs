use thiserror::Error;

/// Errors produced by the numerical routines and the file readers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e}, tolerance {tol:e})")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension must be at least 1")]
    EmptyDimension,

    #[error("confidence exponent x must be nonnegative, got {0}")]
    NegativeX(f64),

    #[error("squared threshold must be nonnegative, got {0}")]
    NegativeThreshold(f64),

    #[error("spectral summary is degenerate (zero matrix)")]
    DegenerateSummary,

    #[error("variance proxy g^2 must be positive, got {0}")]
    NonPositiveG(f64),

    #[error("matrix Gamma is singular at the requested tolerance")]
    SingularGamma,

    #[error("matrix D is singular or not positive definite")]
    SingularD,

    #[error("operation needs a Gamma matrix attached to the colored spec")]
    MissingGamma,

    #[error("operation needs a Gamma certificate")]
    MissingCertificate,

    #[error("input `{name}` must be positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },

    #[error("moment constant C_k overflows f64 for k = {0} (k must be <= 150)")]
    Overflow(u32),

    #[error("epsilon must be positive, got {0}")]
    NonPositiveEps(f64),

    #[error("too few samples: {got} < {min}")]
    TooFewSamples { got: usize, min: usize },

    #[error("design matrix is rank deficient (min eigenvalue of Psi^T Psi = {min_eig:e})")]
    RankDeficient { min_eig: f64 },

    #[error("tensor index ({i}, {j}, {k}) out of range for dimension {dim}")]
    IndexOutOfRange { i: usize, j: usize, k: usize, dim: usize },

    #[error("duplicate tensor entry for canonical triple ({i}, {j}, {k})")]
    DuplicateEntry { i: usize, j: usize, k: usize },

    #[error("{0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
