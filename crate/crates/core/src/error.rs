//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the numerical kernels, the engine and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("displacement amplitude too large: |alpha|^2 = {norm_sqr:.4} exceeds d/9 = {limit:.4}")]
    AmplitudeTooLarge { norm_sqr: f64, limit: f64 },

    #[error("numerical degradation: {0}")]
    NumericalDegradation(String),

    #[error("ill-conditioned solve: {0}")]
    Conditioning(String),

    #[error("degenerate null space: second eigenvalue magnitude {0:.3e}")]
    DegenerateNullSpace(f64),

    #[error("integration step too large: dt = {dt:.3e}, limit = {limit:.3e}")]
    StepSize { dt: f64, limit: f64 },

    #[error("memory guard: joint dimension {dim} exceeds {limit}")]
    MemoryGuard { dim: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
