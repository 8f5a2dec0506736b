//! Crate-wide error type with CLI exit-code mapping.

use thiserror::Error;

/// Errors produced by the library and surfaced by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value is out of its documented domain.
    #[error("configuration error: {0}")]
    Config(String),

    /// Runtime input rejected (non-finite values, shape mismatches, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numeric computation could not produce a finite, meaningful result.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Loss gradient requested at a point where it does not exist (q < 1
    /// exactly on a kink). Reported instead of returning non-finite values.
    #[error("gradient singularity: {0}")]
    GradientSingularity(String),

    /// The asymmetry threshold is infinite: q > 1 together with a = 1 makes
    /// the required ratio unbounded, so no weight vector can satisfy it.
    /// A signal distinct from numeric failure; `verify` reports it as an
    /// unsatisfiable verdict rather than an error.
    #[error("unsatisfiable threshold: q > 1 with a = 1 requires an infinite weight ratio")]
    UnsatisfiableThreshold,

    /// The noise model is not clean-label-dominant for the requested class.
    #[error("dominance violation: {0}")]
    DominanceViolation(String),

    /// Instance-dependent noise has no fixed class-conditional matrix.
    #[error("analytic transition matrix unavailable: {0}")]
    NoAnalyticMatrix(String),

    /// Malformed binary file (IDX ingestion).
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 configuration, 2 runtime/numeric, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::DominanceViolation(_)
            | Error::UnsatisfiableThreshold
            | Error::Json(_) => 1,
            Error::InvalidInput(_)
            | Error::Numeric(_)
            | Error::GradientSingularity(_)
            | Error::NoAnalyticMatrix(_) => 2,
            Error::Format { .. } | Error::Io(_) => 3,
        }
    }
}
