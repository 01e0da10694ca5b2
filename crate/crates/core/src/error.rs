use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("operator is not self-adjoint (deviation {0:e})")]
    NotSelfAdjoint(f64),
    #[error("map is not compressed by the module projection (deviation {0:e})")]
    NotCompressed(f64),
    #[error("degree {degree} out of range 0..={top}")]
    DegreeOutOfRange { degree: usize, top: usize },
    #[error("twist is not closed (face defect {0:e})")]
    NotClosed(f64),
    #[error("resolution {got} below the accuracy floor {floor}")]
    ResolutionTooLow { got: usize, floor: usize },
    #[error("not a Morse form: {0}")]
    NotMorse(String),
    #[error("eigensolver failed: {0}")]
    Solver(String),
    #[error("solver size limit exceeded: {rows} rows > {limit}")]
    SizeLimit { rows: usize, limit: usize },
    #[error("chain map identity violated: {0}")]
    ChainIdentity(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
