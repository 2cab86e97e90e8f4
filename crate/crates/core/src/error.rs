//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("axis point count must be even and positive, got {0}")]
    OddPoints(usize),
    #[error("half-width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("unsupported dimension: {0}")]
    BadDimension(String),
    #[error("input contains a non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("window is numerically zero")]
    ZeroWindow,
    #[error("derivative order {requested} exceeds cap {cap}")]
    DerivativeCap { requested: usize, cap: usize },
    #[error("allocation of {requested} bytes exceeds memory budget of {budget} bytes")]
    MemoryBudget { requested: usize, budget: usize },
    #[error("shear offset {offset} exceeds half-box {half_box} on axis {axis} (aliasing)")]
    AliasGuard { axis: usize, offset: f64, half_box: f64 },
    #[error("regression needs at least {needed} usable points, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("regressors are rank deficient")]
    RankDeficient,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("empty axis block")]
    EmptyBlock,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad file format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
