use thiserror::Error;

pub type Result<T> = std::result::Result<T, GapError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GapError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("kernel must have at least one state")]
    EmptyKernel,

    #[error("entry ({row}, {col}) = {value} is not a finite real")]
    NonFiniteEntry { row: usize, col: usize, value: f64 },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum}, not 1")]
    NonStochasticRow { row: usize, sum: f64 },

    #[error("invalid stationary weights: {0}")]
    InvalidWeights(String),

    #[error("chain has {closed_classes} closed communicating classes; a unique invariant measure needs exactly one")]
    NotUniquelyErgodic { closed_classes: usize },

    #[error("state {state} carries zero stationary mass")]
    ZeroMassState { state: usize },

    #[error("set has stationary mass {mass}; conductance needs 0 < pi(A) < 1")]
    DegenerateSet { mass: f64 },

    #[error("exact enumeration limited to {limit} states, chain has {dim}")]
    TooLargeForExact { dim: usize, limit: usize },

    #[error("exponent {0} outside (1, inf]")]
    InvalidExponent(f64),

    #[error("exponents p = {p}, q = {q} are not conjugate")]
    ConjugateExponentMismatch { p: f64, q: f64 },

    #[error("chain is not weak reversible of order {order}")]
    NotWeakReversible { order: usize },

    #[error("invalid inputs: {0}")]
    InvalidInputs(String),

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}
