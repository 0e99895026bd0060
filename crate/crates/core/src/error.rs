use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension {0} exceeds the supported maximum of {max}", max = crate::linalg::MAX_DIM)]
    DimensionTooLarge(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (relative asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("operator is not strictly positive (min eigenvalue {min:e}, max eigenvalue {max:e})")]
    NotStrictlyPositive { min: f64, max: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("operator is not normalized (trace {0})")]
    NotNormalized(f64),

    #[error("eigendecomposition failed to converge (dim {dim}, Frobenius norm {norm:e})")]
    EigenFailed { dim: usize, norm: f64 },

    #[error("function is not finite on the spectrum (eigenvalue {0:e})")]
    SpectrumOutsideDomain(f64),

    #[error("quadrature did not converge: estimate {value:e}, error estimate {error:e} after {subdivisions} subdivisions")]
    Quadrature {
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("integration routes disagree: {0:e} vs {1:e}")]
    RouteMismatch(f64, f64),

    #[error("inequality kind {kind} cannot be evaluated on {input} input")]
    MismatchedInput { kind: String, input: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
