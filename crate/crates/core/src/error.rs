use thiserror::Error;

use crate::solver::{EnergyTrace, IterationReport};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the range where the formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    /// The direct binomial sum cancelled too much to be trusted.
    #[error("loss of precision evaluating coefficient {index}: estimated relative error {estimate:.3e}")]
    PrecisionLoss { index: usize, estimate: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    /// The polynomial does not vanish to fourth order at an endpoint.
    #[error("endpoint regularity violated: {0}")]
    Regularity(String),

    #[error(
        "fixed-point iteration did not converge after {} iterations (last update {:.3e})",
        .0.iterations, .0.final_update
    )]
    NonConvergence(IterationReport),

    /// A time step failed; `trace` holds the energy up to the last good step.
    #[error("step {step} from t = {time} failed: {source}")]
    StepFailed {
        step: usize,
        time: f64,
        trace: EnergyTrace,
        source: Box<Error>,
    },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
