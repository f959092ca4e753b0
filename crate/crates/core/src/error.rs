use thiserror::Error;

/// Errors produced by measure construction, solvers, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty measure: at least one support point is required")]
    EmptyMeasure,

    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("negative {what} at index {index}: {value}")]
    Negative {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("weights sum to {sum}, too far from 1 to renormalize")]
    WeightSum { sum: f64 },

    #[error("invalid parameter {name} = {value}: {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("matrix is not orthogonal: max |O^T O - I| = {deviation:e}")]
    NotOrthogonal { deviation: f64 },

    #[error("marginal totals differ: {left} vs {right}")]
    UnbalancedMarginals { left: f64, right: f64 },

    #[error("infeasible potentials: phi[{i}] + psi[{j}] exceeds cost by {violation:e}")]
    InfeasiblePotentials { i: usize, j: usize, violation: f64 },

    #[error("reference weights carry no mass")]
    ZeroMass,

    #[error("support size {got} exceeds the brute-force limit {max}")]
    SupportTooLarge { max: usize, got: usize },

    #[error("solver did not reach the requested certificate: gap {gap:e} after {iterations} iterations")]
    NotConverged { gap: f64, iterations: usize },

    #[error("gradient undefined: {0}")]
    GradientUndefined(String),

    #[error("csv parse error at line {line}: {msg}")]
    CsvParse { line: usize, msg: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
