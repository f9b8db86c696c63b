use std::fmt;

use thiserror::Error;

/// A single failed check reported by [`crate::types::validate_problem`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFiniteInput { freq: usize, frame: usize, channel: usize },
    UnsupportedBeta(f64),
    NonPositiveDomain(f64),
    DegenerateShape { freqs: usize, frames: usize, channels: usize },
    ZeroRank,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteInput { freq, frame, channel } => write!(
                f,
                "NonFiniteInput: non-finite entry at (bin {freq}, frame {frame}, channel {channel})"
            ),
            Violation::UnsupportedBeta(b) => write!(
                f,
                "UnsupportedBeta: shape parameter {b} is outside (0, 2] and is not 4"
            ),
            Violation::NonPositiveDomain(p) => {
                write!(f, "NonPositiveDomain: domain parameter {p} must be > 0")
            }
            Violation::DegenerateShape { freqs, frames, channels } => write!(
                f,
                "DegenerateShape: spectrogram is {freqs}x{frames}x{channels}, every axis must be >= 1"
            ),
            Violation::ZeroRank => write!(f, "ZeroRank: NMF rank must be >= 1"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),

    #[error("shape parameter {0} is not valid for this update rule")]
    BetaOutOfRange(f64),

    #[error("signal has {len} samples but the analysis window needs {needed}")]
    SignalTooShort { len: usize, needed: usize },

    #[error("invalid STFT plan: {0}")]
    InvalidPlan(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("scale parameter must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("invalid auxiliary variables: {0}")]
    InvalidAuxiliary(String),

    #[error("weighted covariance is singular")]
    SingularCovariance,

    #[error("demixing matrix is singular")]
    SingularDemixing,

    #[error("majorizer matrix is singular")]
    SingularMajorizer,

    #[error("majorizer direction is degenerate (all projections are zero)")]
    DegenerateDirection,

    #[error("direction solver failed: {0}")]
    SolverFailure(String),

    #[error("reference signal is all zero")]
    ZeroReference,

    #[error("permutation search supports at most 6 sources, got {0}")]
    TooManySources(usize),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("WAV codec failure: {0}")]
    Wav(#[from] hound::Error),
}

impl Error {
    /// True for failures of the numerical core, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularCovariance
                | Error::SingularDemixing
                | Error::SingularMajorizer
                | Error::DegenerateDirection
                | Error::SolverFailure(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
