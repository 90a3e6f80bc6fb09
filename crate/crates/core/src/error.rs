//! Error taxonomy shared by the library and the CLI.
//!
//! Variants map onto process exit codes: configuration/parameter/range
//! problems exit 2, numerical inconsistencies exit 3, non-convergence exits 4,
//! and command-line usage errors exit 64.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or missing run configuration (bad file, missing field, ...).
    #[error("config error: {0}")]
    Config(String),

    /// A function argument violates its documented domain.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A query lies outside the generated/representable range.
    #[error("range error: {0}")]
    Range(String),

    /// Internal cross-checks disagree beyond their tolerance.
    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    /// An iteration failed to reach its tolerance within the step budget.
    #[error("did not converge: {message} (residual {residual:.3e})")]
    NonConvergence { message: String, residual: f64 },

    #[error("io error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    pub fn inconsistency(msg: impl Into<String>) -> Self {
        Error::NumericalInconsistency(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parameter(_) | Error::Range(_) | Error::Io { .. } => 2,
            Error::NumericalInconsistency(_) => 3,
            Error::NonConvergence { .. } => 4,
        }
    }
}
