use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad class of a failure, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Parameters or configuration violate a precondition.
    Config,
    /// Input data is missing, malformed or inconsistent.
    Data,
    /// Filesystem failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency {freq} Hz is at or above Nyquist ({nyquist} Hz)")]
    Aliasing { freq: f64, nyquist: f64 },

    #[error("invalid band [{lo}, {hi}] Hz for sampling rate {fs} Hz")]
    InvalidBand { lo: f64, hi: f64, fs: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("insufficient duration: need {needed} samples, have {available}")]
    InsufficientDuration { needed: usize, available: usize },

    #[error("unknown design: {0}")]
    UnknownDesign(String),

    #[error("sampling rate {fs} Hz too low for resonance {f0} Hz (need at least {min} Hz)")]
    SampleRateTooLow { fs: f64, f0: f64, min: f64 },

    #[error("expected a {expected} series, got {found}")]
    WrongUnit { expected: &'static str, found: &'static str },

    #[error("feature dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("class {label} has {count} sample(s); stratified split needs at least 2")]
    ClassTooSmall { label: String, count: usize },

    #[error("empty manifest")]
    EmptyManifest,

    #[error("{path}:{line}: {message}")]
    Manifest { path: PathBuf, line: usize, message: String },

    #[error("{path}: {message}")]
    Recording { path: PathBuf, message: String },

    #[error("{path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error("recording {recording}: {source}")]
    InRecording {
        recording: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_)
            | Error::Aliasing { .. }
            | Error::InvalidBand { .. }
            | Error::UnknownDesign(_)
            | Error::SampleRateTooLow { .. }
            | Error::WrongUnit { .. }
            | Error::ConfigFile { .. } => ErrorKind::Config,
            Error::EmptyInput(_)
            | Error::InsufficientDuration { .. }
            | Error::DimensionMismatch { .. }
            | Error::ClassTooSmall { .. }
            | Error::EmptyManifest
            | Error::Manifest { .. }
            | Error::Recording { .. }
            | Error::Csv(_) => ErrorKind::Data,
            Error::InRecording { source, .. } => source.kind(),
            Error::Io { .. } => ErrorKind::Io,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
