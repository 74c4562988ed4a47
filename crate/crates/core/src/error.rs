use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("truncation incomplete ({context}): missing {missing:?}")]
    TruncationIncomplete { context: String, missing: Vec<String> },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("mismatched windows: {0}")]
    MismatchedWindows(String),
    #[error("zero row at vertex {0}")]
    ZeroRow(String),
    #[error("deepen prefix: {0}")]
    DeepenPrefix(String),
    #[error("maximal path: {0}")]
    MaximalPath(String),
    #[error("minimal path: {0}")]
    MinimalPath(String),
    #[error("path is not extremal: {0}")]
    NotExtremal(String),
    #[error("spec error at {path}: {message}")]
    Spec { path: String, message: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn truncation(context: impl Into<String>, missing: Vec<String>) -> Self {
        Error::TruncationIncomplete { context: context.into(), missing }
    }

    pub fn is_truncation(&self) -> bool {
        matches!(self, Error::TruncationIncomplete { .. })
    }

    /// Short machine-readable tag, used by the CLI and the C API.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::TruncationIncomplete { .. } => "truncation-incomplete",
            Error::Unsupported(_) => "unsupported",
            Error::MismatchedWindows(_) => "mismatched-windows",
            Error::ZeroRow(_) => "zero-row",
            Error::DeepenPrefix(_) => "deepen-prefix",
            Error::MaximalPath(_) => "maximal-path",
            Error::MinimalPath(_) => "minimal-path",
            Error::NotExtremal(_) => "not-extremal",
            Error::Spec { .. } => "spec",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
