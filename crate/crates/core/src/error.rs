use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite state")]
    NonFiniteState,

    #[error("blow-up at step {step}")]
    BlowUp { step: u64 },

    #[error("parameterization blow-up at step {step}")]
    ParameterizationBlowUp { step: u64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("window of {window} samples is longer than the trajectory ({len} samples)")]
    WindowTooLong { window: usize, len: usize },

    #[error("no gravity-wave peak")]
    NoGravityWavePeak,

    #[error("too few usable histogram bins for a fit: {0}")]
    TooFewBins(usize),

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParams(_) | Error::Format(_) => 2,
            Error::NonFiniteState
            | Error::BlowUp { .. }
            | Error::ParameterizationBlowUp { .. }
            | Error::NonFiniteLoss { .. } => 3,
            Error::WindowTooLong { .. }
            | Error::NoGravityWavePeak
            | Error::TooFewBins(_)
            | Error::InsufficientData(_) => 4,
            Error::Dimension { .. } | Error::Io(_) => 1,
        }
    }
}
