use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation needs a 1-shift, model has step {0}")]
    StepNotOne(usize),

    #[error("diagonals must vanish identically (sup |d| = {0})")]
    NonzeroDiagonals(f64),

    #[error("d_{index} - lambda vanishes; the forward series does not exist")]
    DenominatorZero { index: i64 },

    #[error("weight w_{index} is zero; the backward series does not exist")]
    WeightZero { index: i64 },

    #[error("probe index {index} needs columns outside the coefficient range [{lo}, {hi}]")]
    ProbeOutOfRange { index: i64, lo: i64, hi: i64 },

    #[error("refinement budget exceeded: {cells} cells > cap {cap}")]
    BudgetExceeded { cells: usize, cap: usize },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("matrix dimension {n} exceeds the dense cap {cap}")]
    DimensionTooLarge { n: usize, cap: usize },

    #[error("circulant truncation needs N a multiple of the period {period}, got N = {n}")]
    PeriodMismatch { n: usize, period: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
