use thiserror::Error;

/// Errors reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {0} must be even and at least 4")]
    InvalidGridSize(usize),

    #[error("grid period {0} must be positive and finite")]
    InvalidPeriod(f64),

    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("spectrum is not conjugate symmetric (imaginary residue {residue:e})")]
    NonRealSpectrum { residue: f64 },

    #[error("probability {0} is outside (0, 1)")]
    InvalidProbability(f64),

    #[error("the probe functional is zero")]
    ZeroProbe,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("solver report does not carry a minimizer")]
    NoMinimizer,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
