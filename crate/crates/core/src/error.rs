use thiserror::Error;

/// Errors raised by density evaluation, statistics and the power lab.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point contains NaN at coordinate {0}")]
    NanInput(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("optimizer did not converge after {iterations} iterations (best iterate {best:e})")]
    Optimizer { iterations: usize, best: f64 },

    #[error("density check failed: {0}")]
    Verification(String),

    #[error("no consistent permutation of the alternatives for group element {0}")]
    NoInducedPermutation(usize),

    #[error("group axioms violated: {0}")]
    GroupAxioms(String),

    #[error("statistic failed on {failures} of {total} draws")]
    TooManyFailures { failures: usize, total: usize },

    #[error("unknown identifier {0:?}")]
    UnknownId(String),
}

pub type Result<T> = std::result::Result<T, Error>;
