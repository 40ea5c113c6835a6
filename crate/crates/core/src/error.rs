use std::path::PathBuf;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("region ({x1},{y1})-({x2},{y2}) lies outside the {width}x{height} map")]
    RegionOutOfBounds {
        x1: u32,
        y1: u32,
        x2: u32,
        y2: u32,
        width: u32,
        height: u32,
    },
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("cannot split a side of length {0}")]
    SideTooSmall(u32),
    #[error("partition stopped at {reached} of {target} regions: no region left with a side above s_min")]
    InfeasiblePartition { reached: usize, target: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite parameter: {0}")]
    NonFiniteParameter(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("image too small: {0}")]
    ImageTooSmall(String),
    #[error("unsupported GPST version {0}")]
    UnsupportedVersion(u16),
    #[error("corrupt token file: {0}")]
    CorruptFile(String),
    #[error("token invariant violated: {0}")]
    InvariantViolation(String),
}
