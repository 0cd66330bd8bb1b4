//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across parameter validation, the
/// eigenproblem, sensitivity analysis, sweeps, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter is NaN or infinite.
    #[error("non-finite parameter: {field} = {value}")]
    NonFiniteParameter { field: &'static str, value: f64 },

    /// A value violates a documented bound.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    /// The QL iteration did not converge for some eigenvalue.
    #[error("eigen-decomposition did not converge (level {level} after {iterations} QL sweeps)")]
    SolverFailure { level: usize, iterations: usize },

    /// The ncut escalation ladder ran out before E01 stabilized.
    #[error(
        "E01 did not converge in ncut: last two values {e01_prev} and {e01_last} GHz \
         (tolerance {tol} GHz)"
    )]
    NoConvergence {
        e01_prev: f64,
        e01_last: f64,
        tol: f64,
    },

    /// A finite-difference step is too small relative to the variable's magnitude.
    #[error("finite-difference step {step} underflows at operating value {magnitude}")]
    StepUnderflow { step: f64, magnitude: f64 },

    /// Hellmann-Feynman derivative requested for a (near-)degenerate 0-1 pair.
    #[error("levels 0 and 1 degenerate (E01 = {e01} GHz); perturb ng before differentiating")]
    DegeneratePair { e01: f64 },

    /// Asymptotic model calibration against an unbounded T2.
    #[error("asymptotic calibration reference T2 is unbounded")]
    UnboundedReference,

    /// Two series do not share the same x grid.
    #[error("x-grid mismatch: {detail}")]
    GridMismatch { detail: String },

    /// A plot was requested for a channel with no drawable data.
    #[error("no plottable series for channel {channel}")]
    EmptySeries { channel: &'static str },

    /// Malformed configuration text.
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A sweep row failed; the offending ratio is identified.
    #[error("sweep row at EJ/Ec = {ratio} failed: {source}")]
    SweepRow {
        ratio: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
