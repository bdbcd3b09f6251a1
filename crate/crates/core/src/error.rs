use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid timed word: {0}")]
    InvalidWord(String),

    #[error("invalid mouse trace: {0}")]
    InvalidTrace(String),

    #[error("mouse trace has no points")]
    EmptyTrace,

    #[error("point set is empty")]
    EmptyPoints,

    #[error("manual transcript is empty but the automatic transcript has {0} words")]
    EmptyManualTranscript(usize),

    #[error("invalid matching: {0}")]
    InvalidMatching(String),

    #[error("invalid narrative: {0}")]
    InvalidNarrative(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sinusoid dimension must be even and positive, got {0}")]
    OddDimension(usize),

    #[error("corpus contains no captions")]
    EmptyCorpus,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("class `{0}` has no masks in the library")]
    UnknownClass(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
