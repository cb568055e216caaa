use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid privacy parameters: epsilon={epsilon}, delta_q={delta_q} (both must be finite and > 0)")]
    InvalidPrivacySpec { epsilon: f64, delta_q: f64 },

    #[error("sigma must be finite and > 0, got {0}")]
    NonPositiveSigma(f64),

    #[error("probability {0} is outside [0, 1]")]
    OutOfRangeU(f64),

    #[error("epsilon - ln(delta C) = {0} is not positive; sigma lies below the feasible region")]
    DenominatorNotPositive(f64),

    #[error("bisection bracket is invalid: {0}")]
    InternalBracketError(String),

    #[error("query value {value:?} lies outside the output domain")]
    QueryValueOutsideDomain { value: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("dimension {m} exceeds the limit of {max} for grid evaluation")]
    DimensionTooLarge { m: usize, max: usize },

    #[error("node {node} out of range for a graph on {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of an iterative numerical routine, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::InternalBracketError(_)
        )
    }
}
