use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("wav error on {path}: {message}")]
    Wav { path: PathBuf, message: String },
    #[error("unsupported audio encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("empty audio in {0}")]
    EmptyAudio(PathBuf),
    #[error("missing reference file {0}")]
    MissingReference(PathBuf),
    #[error("duplicate recording id {0}")]
    DuplicateId(String),
    #[error("malformed input at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("signal too short: need at least {required} samples, got {actual}")]
    SignalTooShort { required: usize, actual: usize },
    #[error("cannot stratify: class {class} has only {count} members")]
    CannotStratify { class: String, count: usize },
    #[error("unsegmentable recording: {0}")]
    Unsegmentable(String),
    #[error("state {0} has no training examples")]
    MissingState(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("emission column {0} is -inf for every state")]
    DeadEmission(usize),
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("empty input: {0}")]
    Empty(String),
    #[error("stage {stage} failed for recording {recording}: {source}")]
    Stage {
        stage: String,
        recording: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { location: location.into(), message: message.into() }
    }

    pub(crate) fn at_stage(self, stage: &str, recording: &str) -> Self {
        Error::Stage { stage: stage.to_string(), recording: recording.to_string(), source: Box::new(self) }
    }

    /// True for errors caused by the data rather than by the caller.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::InvalidArgument(_) => false,
            Error::Stage { source, .. } => source.is_data_error(),
            _ => true,
        }
    }
}
