use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("map is not a circle homeomorphism (min F' = {min_derivative:e})")]
    NotHomeomorphism { min_derivative: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("rotation number is rational ({p}/{q}); an irrational rotation number is required")]
    RationalRotation { p: i64, q: i64 },

    #[error("rotation number could not be certified within an orbit budget of {budget}")]
    Uncertified { budget: usize },

    #[error("orbit accuracy fault: {0}")]
    AccuracyFault(String),

    #[error("s-measure solver stopped after {iterations} iterations with KR gap {gap:e}")]
    SolverNotConverged { iterations: usize, gap: f64 },

    #[error("continued fraction of the target is exhausted before reaching the tolerance (width {width:e})")]
    DepthExhausted { width: f64 },

    #[error("linear solver failure: {0}")]
    Linear(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
