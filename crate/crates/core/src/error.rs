use thiserror::Error;

/// Errors produced by the modem library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pulse has zero energy")]
    ZeroEnergy,

    #[error("pulse is not even-symmetric about (N-1)/2 (max deviation {deviation:e})")]
    AsymmetricPulse { deviation: f64 },

    #[error("Zak-domain power is near singular (min/max = {ratio:e})")]
    SingularZak { ratio: f64 },

    #[error("orthogonalized pulse is not real (imaginary energy fraction {fraction:e})")]
    NonRealResult { fraction: f64 },

    #[error("polyphase refinement did not converge (residual {residual:e})")]
    RefinementFailed { residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
