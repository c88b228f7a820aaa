use thiserror::Error;

pub type Result<T> = std::result::Result<T, PadError>;

#[derive(Debug, Error)]
pub enum PadError {
    #[error("index t={t} out of range for lag {lag} and series length {len}")]
    IndexOutOfRange { t: usize, lag: usize, len: usize },

    #[error("invalid lag {0}: lag must be at least 1")]
    InvalidLag(usize),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },

    #[error("input must be sorted ({0})")]
    UnsortedInput(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("series is empty")]
    EmptySeries,

    #[error("non-finite value at index {index}")]
    NonFiniteSample { index: usize },

    #[error("invalid anomaly window: {0}")]
    InvalidWindow(String),

    #[error("inverse power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("spectral backend failure: {0}")]
    SpectralBackend(String),

    #[error("eps={eps:e} leaves rank 0 (sigma_1={sigma_1:e}); lower eps")]
    DegenerateRank { eps: f64, sigma_1: f64 },

    #[error("parse error on line {line}: {content:?}")]
    Parse { line: usize, content: String },

    #[error("non-finite value on line {line}")]
    NonFiniteValue { line: usize },

    #[error("file contains no samples")]
    EmptyFile,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PadError {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            PadError::NoConvergence { .. }
                | PadError::SpectralBackend(_)
                | PadError::DegenerateRank { .. }
        )
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        PadError::InvalidParameter { name, reason: reason.into() }
    }
}
