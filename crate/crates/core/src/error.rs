use thiserror::Error;

/// Errors raised by geometry, energy and optimization routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operation requires a nonempty set")]
    EmptySet,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("mass mismatch: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("sets do not share a common lattice")]
    GridMismatch,
    #[error("box too small: {0}")]
    BoxTooSmall(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("cut leaves an empty piece")]
    EmptyPiece,
    #[error("pieces are not disjoint")]
    NotDisjoint,
    #[error("shape is not star-shaped (1 + rho <= 0 somewhere)")]
    NotStarShaped,
    #[error("deficit {0} is below the estimator tolerance; ratio undefined")]
    DegenerateDeficit(f64),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("malformed raster: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
