use thiserror::Error;

/// Errors raised by the simulation and design routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time grid must have at least one step")]
    EmptyGrid,

    #[error("time grid too coarse: {steps} steps, need at least {required}")]
    GridTooCoarse { steps: usize, required: usize },

    #[error("time {t} ns outside pulse window [0, {duration}] ns")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("noise source `{0}` couples to more than one direction; decompose it first")]
    MultiDirectionNoise(String),

    #[error("unknown {what} `{value}`")]
    Unknown { what: &'static str, value: String },

    #[error("gate set is missing generator `{0}`")]
    MissingGenerator(String),

    #[error("non-physical decoherence setting: T2 = {t2_us} us exceeds twice T1 = {t1_us} us")]
    NonPhysicalDecoherence { t1_us: f64, t2_us: f64 },

    #[error("linear system for {0} is singular")]
    Singular(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
