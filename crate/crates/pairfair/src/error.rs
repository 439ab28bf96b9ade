use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes: `Config` is a
/// usage/configuration problem (exit 2), the data-shaped variants are exit 3,
/// everything else surfaces as an internal error (exit 5). The
/// infeasible-shrink fallback is not an error; it is reported as a flag on the
/// training result and mapped to exit 4 by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Csv { path: PathBuf, line: u64, msg: String },

    #[error("data: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("model file {path}: {msg}")]
    ModelFormat { path: PathBuf, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("linear program infeasible")]
    Infeasible,

    #[error("power iteration did not converge: residual {residual:.3e} after {iters} iterations")]
    NoConvergence { residual: f64, iters: usize },

    #[error("internal: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI. Success is 0 and the
    /// infeasible-with-fallback outcome is 4; neither goes through `Error`.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Csv { .. }
            | Error::Data(_)
            | Error::Io { .. }
            | Error::ModelFormat { .. }
            | Error::Dimension { .. } => 3,
            _ => 5,
        }
    }
}
