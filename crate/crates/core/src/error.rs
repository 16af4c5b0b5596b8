use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("timestamp {0} is outside the configured corpus range")]
    OutOfRange(chrono::DateTime<chrono::Utc>),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checksum mismatch in segment `{segment}`")]
    Checksum { segment: String },
    #[error("corrupt store segment `{segment}`: {message}")]
    Corrupt { segment: String, message: String },
    #[error("empty vocabulary after applying min_count {0}")]
    EmptyVocabulary(u64),
    #[error("missing upstream artifact {path}: run the `{stage}` stage first")]
    MissingStage { stage: &'static str, path: PathBuf },
    #[error("config fingerprint mismatch: `{stage}` was built with {found}, current config is {expected}")]
    FingerprintMismatch {
        stage: &'static str,
        expected: String,
        found: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.to_string(),
        }
    }
}
