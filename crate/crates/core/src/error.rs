use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Hermite order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("Pauli violation: fermionic occupation {occupation} in mode {mode}")]
    PauliViolation { mode: char, occupation: usize },

    #[error("truncated tail mass {tail:.3e} at cutoff {cutoff} exceeds 1e-12; need cutoff >= {required}")]
    Truncation { cutoff: usize, tail: f64, required: usize },

    #[error("basis change needs cutoff {required}, above the representable limit {limit}")]
    CutoffOverflow { required: usize, limit: usize },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("algebra inconsistency: imaginary residue {residue:.3e} in a real density")]
    AlgebraInconsistency { residue: f64 },

    #[error("quadrature did not converge (residual estimate {residual:.3e})")]
    QuadratureNotConverged { residual: f64 },

    #[error("state has no pairs to correlate (<:N^2:> = {0:.3e})")]
    NoPairs(f64),

    #[error("state is not rotation invariant (deviation {deviation:.3e}); use the two-angle distribution")]
    AnisotropicState { deviation: f64 },

    #[error("frame set is empty")]
    EmptyFrames,

    #[error("angular rejection acceptance {rate:.4} is below 1%; state is outside the ring-factorizable family")]
    SamplingMethod { rate: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that come from numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Truncation { .. }
                | Error::CutoffOverflow { .. }
                | Error::AlgebraInconsistency { .. }
                | Error::QuadratureNotConverged { .. }
                | Error::NoPairs(_)
                | Error::SamplingMethod { .. }
        )
    }
}
