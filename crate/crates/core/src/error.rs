use thiserror::Error;

#[derive(Debug, Error)]
pub enum TdiError {
    #[error("operator is not Hermitian: max |A - A^dag| = {residual:e}")]
    NotHermitian { residual: f64 },

    #[error("operator is not unitary: max |U^dag U - I| = {residual:e}")]
    NotUnitary { residual: f64 },

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("dimension {0} exceeds the supported maximum of {max}", max = crate::operator::MAX_DIM)]
    DimTooLarge(usize),

    #[error("state is not positive semidefinite: eigenvalue {eigenvalue:e}")]
    Positivity { eigenvalue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, TdiError>;
