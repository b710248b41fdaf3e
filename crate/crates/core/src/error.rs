use thiserror::Error;

/// Errors raised by field operations, flows and checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("grid {nx}x{ny} too small or odd (need even counts >= {min})")]
    GridTooSmall { nx: usize, ny: usize, min: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field shapes do not match")]
    GridMismatch,
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("row {row} has x-mean {mean:e}; periodic antiderivative would grow secularly")]
    SecularGrowth { row: usize, mean: f64 },
    #[error("constraint operator is singular on mode ({kx}, {ky}) which carries source energy")]
    ResonantMode { kx: i64, ky: i64 },
    #[error("source has nonzero mean {0:e}")]
    NonzeroMean(f64),
    #[error("vector at node {0} is too short to normalize")]
    DegenerateVector(usize),
    #[error("spin length deviates from 1 at node {node} by {deviation:e}")]
    NotUnit { node: usize, deviation: f64 },
    #[error("metric determinant {value:e} at node {node} is below the floor")]
    DegenerateMetric { node: usize, value: f64 },
    #[error("negative discriminant at node {0}")]
    NegativeDiscriminant(usize),
    #[error("graph slope phi_1 vanishes at node {0}")]
    VanishingSlope(usize),
    #[error("time step {dt:e} exceeds stability bound {bound:e}")]
    Unstable { dt: f64, bound: f64 },
    #[error("blow-up detected at t = {0}")]
    BlowUp(f64),
    #[error("constraint residual {residual:e} exceeds limit at t = {t}")]
    ConstraintLost { t: f64, residual: f64 },
    #[error("need at least {needed} time levels, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for FlowError {
    fn from(e: std::io::Error) -> Self {
        FlowError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FlowError>;
