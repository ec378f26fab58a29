use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum AptError {
    #[error("mode sizes differ: {left:?} vs {right:?}")]
    ModeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    /// A macroscopic quantity that must stay strictly positive (no vacuum, no
    /// absolute zero temperature) was not.
    #[error("non-positive {field} = {value:e} at spatial node {node:?}")]
    Positivity {
        field: &'static str,
        node: Vec<usize>,
        value: f64,
    },

    #[error("local MALS system is singular at bond {bond}")]
    SingularLocal { bond: usize },

    #[error("MALS did not converge at step {step}: residual {residual:e} > {tolerance:e} after {sweeps} sweeps")]
    NotConverged {
        step: usize,
        residual: f64,
        tolerance: f64,
        sweeps: usize,
    },

    #[error("dense oracle refuses {entries} entries (limit {limit})")]
    SizeGuard { entries: usize, limit: usize },

    #[error("iterative solver stagnated at relative residual {0:e}")]
    Stagnation(f64),

    #[error("linear algebra backend: {0}")]
    Linalg(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for AptError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        AptError::Linalg(e.to_string())
    }
}

impl From<ndarray::ShapeError> for AptError {
    fn from(e: ndarray::ShapeError) -> Self {
        AptError::InvalidArgument(e.to_string())
    }
}

pub type Result<T, E = AptError> = std::result::Result<T, E>;
