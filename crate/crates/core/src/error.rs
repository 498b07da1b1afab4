use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("unsupported matrix dimensions {rows}x{cols} (only 2 and 4 are supported)")]
    UnsupportedDimensions { rows: usize, cols: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("parameter `{name}` = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("filter ensemble violates completeness (residual {0:e})")]
    Incomplete(f64),

    #[error("degenerate filter branch ({0},{1}): probability below threshold")]
    DegenerateBranch(usize, usize),

    #[error("bracket failure: feasibility error {error:e} at radius bound {bound} exceeds threshold")]
    BracketFailure { bound: f64, error: f64 },

    #[error("solver did not converge after {iters} iterations (best value {best:e})")]
    NonConvergence { iters: usize, best: f64 },

    #[error("incomplete measurement design: {0}")]
    IncompleteDesign(String),

    #[error("singular design matrix")]
    SingularDesign,

    #[error("poor Kraus fit: residual {0:e}")]
    PoorFit(f64),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
