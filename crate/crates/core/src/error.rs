use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("out-of-sequence sample: expected frame {expected}, got {got}")]
    Sequencing { expected: usize, got: usize },

    #[error("session already finalized")]
    Finalized,

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("equality constraint violated at index {index} (|diff| = {diff:e})")]
    ConstraintViolation { index: usize, diff: f64 },

    #[error(
        "solver did not converge in {iterations} iterations \
         (primal residual {primal_residual:e}, dual residual {dual_residual:e})"
    )]
    NonConvergence {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
    },

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotSpd { row: usize, pivot: f64 },

    #[error("problem too large for the reference solver: n = {n} (max {max})")]
    ProblemTooLarge { n: usize, max: usize },

    #[error("channel mismatch: layer expects {expected} input channels, got {got}")]
    ChannelMismatch { expected: usize, got: usize },

    #[error("input too short: length {len} < required {min}")]
    InputTooShort { len: usize, min: usize },

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Divergence {
        epoch: usize,
        batch: usize,
        loss: f64,
    },

    #[error("weights required: {0}")]
    MissingWeights(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("csv error at line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the numerics (as opposed to bad input data).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::NotSpd { .. } | Error::Divergence { .. }
        )
    }
}
