use thiserror::Error;

#[derive(Debug, Error)]
pub enum SepError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositiveSemidefinite(f64),
    #[error("eigensolver failed to converge")]
    EigenConvergence,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("empty decomposition")]
    EmptyDecomposition,
    #[error("scan endpoints do not bracket a verdict change")]
    NoBracket,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed state file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, SepError>;
