use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("mesh has no interior degrees of freedom")]
    NoInteriorDofs,

    #[error("initial datum does not vanish at boundary vertex {vertex} (|psi0| = {value:e})")]
    NonzeroBoundaryData { vertex: usize, value: f64 },

    #[error("point ({0}) lies outside the space-time domain")]
    OutsideDomain(String),

    #[error("singular matrix: pivot {index} has magnitude {magnitude:e}")]
    SingularMatrix { index: usize, magnitude: f64 },

    #[error("QR iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error(
        "temporal core is not diagonalizable (smallest singular value of X_t = {sigma_min:e}); \
         retry with the Bartels-Stewart variant"
    )]
    NotDiagonalizable { sigma_min: f64 },

    #[error("spatial factorization failed at temporal index {index} for shift {shift}: pivot {pivot} collapsed")]
    SpatialFactorization {
        index: usize,
        shift: Complex64,
        pivot: usize,
    },

    #[error("unsupported quadrature order {0}")]
    UnsupportedQuadrature(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("estimated memory {required} bytes exceeds the limit of {limit} bytes at level {level}")]
    MemoryGuard {
        level: usize,
        required: u64,
        limit: u64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("level {level}, solver {variant}: {source}")]
    AtLevel {
        level: usize,
        variant: &'static str,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// The innermost error, looking through [`Error::AtLevel`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLevel { source, .. } => source.root(),
            other => other,
        }
    }

    /// Whether the error stems from the run configuration rather than from
    /// the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self.root(),
            Error::Config(_) | Error::Parse(_) | Error::MemoryGuard { .. }
        )
    }
}
