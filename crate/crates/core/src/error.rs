use thiserror::Error;

use crate::solvers::picard::PicardTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent must exceed 1 (got {0})")]
    ExponentTooSmall(f64),
    #[error("invalid exponent field: {0}")]
    InvalidExponent(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("field carries a nonzero mean ({0:e}); request mean removal or project first")]
    NonzeroMean(f64),
    #[error("expected {expected} components, found {found}")]
    ComponentMismatch { expected: usize, found: usize },
    #[error("dyadic index {j} outside covered range [{min}, {max}]")]
    DyadicOutOfRange { j: i32, min: i32, max: i32 },
    #[error("support exceeds the grid band: {0}")]
    BandOverflow(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("input is not divergence free (relative residual {0:e})")]
    NotSolenoidal(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error("Picard iteration diverged after {} steps", .0.differences.len())]
    Divergence(Box<PicardTrace>),
    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
