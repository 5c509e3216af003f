use thiserror::Error;

/// Errors produced while building systems or running enumerations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {x} lies outside the ambient interval [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("malformed map: {0}")]
    MalformedMap(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("Markov condition violated by map {map}, branch {branch}: {reason}")]
    MarkovViolation {
        map: usize,
        branch: usize,
        reason: String,
    },

    #[error("word is not admissible: {0}")]
    Inadmissible(String),

    #[error("greedy expansion of 1 not finite (to depth {depth})")]
    InfiniteExpansion { depth: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("estimated {estimated:.3e} candidate words exceeds the enumeration guard {limit:.0e}")]
    SizeGuard { estimated: f64, limit: f64 },

    #[error("empty measure: {0}")]
    EmptyMeasure(String),

    #[error("non-finite value {value} for cycle {cycle}")]
    NonFinite { cycle: String, value: f64 },

    #[error("point {0} lies on a cell boundary")]
    BoundaryPoint(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("internal consistency: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
