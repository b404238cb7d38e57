use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "truncation unreachable: excluded mass below {tail_eps:e} needs dim {required}, \
         but the cap is {max_dim} (raise max_dim or loosen tail_eps)"
    )]
    TruncationUnreachable {
        required: usize,
        max_dim: usize,
        tail_eps: f64,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Fock index {n} is out of range for basis dim {dim}")]
    FockOutOfRange { n: usize, dim: usize },

    #[error("photon number {n} has no excited-state partner (requires n >= 1)")]
    NoDressedManifold { n: usize },

    #[error("closed-form dynamics requires resonance, got omega0 = {omega0}, omega = {omega}")]
    NotResonant { omega: f64, omega0: f64 },

    #[error("basis dim {dim} exceeds the oracle cap {cap}")]
    OracleCapExceeded { dim: usize, cap: usize },

    #[error(
        "integration failed at t = {t}: step size {step:e} underflowed after {steps} steps \
         (last error estimate {error_estimate:e})"
    )]
    IntegrationFailure {
        t: f64,
        step: f64,
        steps: usize,
        error_estimate: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
