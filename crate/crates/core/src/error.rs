use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("operator block {0} is not Hermitian")]
    NotHermitian(usize),
    #[error("column {0} has zero l1 norm")]
    ZeroColumn(usize),
    #[error("design matrix has rank {rank} < {cols} columns; {} unidentifiable combinations", null_space.len())]
    RankDeficient {
        rank: usize,
        cols: usize,
        null_space: Vec<Vec<Complex64>>,
    },
    #[error("stopping rule not met after {0} iterations (spectral gap too small)")]
    MaxIterations(usize),
    #[error("signal magnitude {magnitude:.3e} at m = {m} is below the floor {floor:.3e}")]
    MagnitudeFloor { m: usize, magnitude: f64, floor: f64 },
    #[error("zero unitary diagonal for label {0}; measure it with the Clifford trick instead")]
    ZeroDiagonal(String),
    #[error("label {0} is the identity index")]
    IdentityLabel(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
