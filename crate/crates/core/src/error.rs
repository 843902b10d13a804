use crate::kernel::Grid;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: Grid, right: Grid },
    #[error("kernel is not Hermitian: asymmetry {asymmetry:e} exceeds {tolerance:e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },
    #[error("not a density kernel: {0}")]
    NotDensity(String),
    #[error("invalid time {t}: {reason}")]
    InvalidTime { t: f64, reason: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("boundary value must vanish, found |f(0)| = {0:e}")]
    BoundaryNonzero(f64),
    #[error("snapshot line {line}: {msg}")]
    Snapshot { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
