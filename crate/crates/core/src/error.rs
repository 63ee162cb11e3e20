use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerics, environments and learners.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A tensor or vector did not have the expected size.
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    /// `backward` was called without a preceding `forward`.
    BackwardWithoutForward,
    /// Two networks that must share an architecture do not.
    ArchitectureMismatch,
    /// A gradient contained NaN or infinity.
    NonFiniteGradient { parameter: String },
    /// An environment received a NaN or infinite action.
    NonFiniteAction,
    /// The replay buffer cannot supply a batch.
    InsufficientSamples { available: usize, requested: usize },
    /// A configuration value is outside its allowed range.
    InvalidConfig(String),
    /// A metric was asked for on an empty learning curve.
    EmptyCurve,
    /// A metric needs more trace entries than were given.
    TraceTooShort { len: usize, min: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch {
                context,
                expected,
                found,
            } => write!(f, "{context}: expected size {expected}, found {found}"),
            Error::BackwardWithoutForward => write!(f, "backward called without a cached forward pass"),
            Error::ArchitectureMismatch => write!(f, "network architectures differ"),
            Error::NonFiniteGradient { parameter } => {
                write!(f, "non-finite gradient in parameter `{parameter}`")
            }
            Error::NonFiniteAction => write!(f, "action contains NaN or infinity"),
            Error::InsufficientSamples {
                available,
                requested,
            } => write!(
                f,
                "replay buffer holds {available} transitions, batch needs {requested}"
            ),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::EmptyCurve => write!(f, "learning curve is empty"),
            Error::TraceTooShort { len, min } => {
                write!(f, "trace has {len} entries, at least {min} required")
            }
        }
    }
}

impl core::error::Error for Error {}
