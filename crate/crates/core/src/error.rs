use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("exponent {0} outside the supported range |n| <= 2^20")]
    ExponentOutOfRange(i64),

    #[error("zero coordinate raised to a negative power")]
    ZeroToNegativePower,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("noise is deterministic; the existence checks need a nondeterministic law")]
    DeterministicNoise,

    #[error("model is not in causal mode (AR/MA index sets must lie in the nonnegative orthant)")]
    NotCausal,

    #[error("|Phi| = {min_modulus:e} on the torus grid is below the node floor; coefficient aliasing is unbounded")]
    AliasingRefused { min_modulus: f64 },

    #[error("truncation box exceeds the stored coefficient box")]
    TruncationExceedsBox,

    #[error("interior window is empty")]
    EmptyInterior,

    #[error("polynomial has negative exponents; a closed-polydisc search needs a proper polynomial")]
    LaurentInput,

    #[error("counting box {given} too small; decay envelope requires at least {needed}")]
    InsufficientBox { given: usize, needed: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
