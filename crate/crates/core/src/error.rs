use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid jump measure: {0}")]
    InvalidMeasure(String),

    #[error("moment order must be at least 1, got {0}")]
    InvalidOrder(usize),

    #[error(
        "gram matrix is near-singular: condition number {condition:.3e} exceeds {limit:.1e} (jump sizes too close)"
    )]
    NearSingular { condition: f64, limit: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("polynomial index {index} out of range 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid clock profile: {0}")]
    InvalidClock(String),

    #[error("jump probability overflow: total intensity x dt = {mass:.4} >= 1; use at least {min_steps} steps")]
    ProbabilityOverflow { mass: f64, min_steps: usize },

    #[error("lattice would hold {nodes} nodes, above the cap of {cap}")]
    LatticeTooLarge { nodes: u64, cap: u64 },

    #[error("fixed-point iteration did not converge at step {step}, node {node} (residual {residual:e})")]
    FixedPointDiverged { step: usize, node: usize, residual: f64 },

    #[error("driver produced a non-finite value at step {step}, node {node}")]
    NonFinite { step: usize, node: usize },

    #[error("Picard iteration is not contracting: distance grew for {0} consecutive iterations")]
    NonContraction(usize),

    #[error("Picard iteration did not reach tolerance within {0} iterations")]
    PicardExhausted(usize),

    #[error("inputs do not share one lattice, Brownian path and clock")]
    Mismatched,

    #[error("penalty n = {n} is below the growth constant K = {k}")]
    PenaltyBelowGrowth { n: f64, k: f64 },

    #[error(
        "ladder ordering violated between rungs n = {lower} and n = {upper} at step {step}, node {node}: gap {gap:e}"
    )]
    LadderOrder { lower: f64, upper: f64, step: usize, node: usize, gap: f64, jump_condition_min: f64 },

    #[error("comparison violated at step {step}, node {node}: Y1 - Y2 = {gap:e}")]
    ComparisonViolated { step: usize, node: usize, gap: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
