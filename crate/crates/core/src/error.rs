use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("pretokenization configs differ: {0}")]
    ConfigMismatch(String),

    #[error("word {word:?} contains the end-of-word marker {marker:?}")]
    MarkerInWord { word: String, marker: String },

    #[error("target vocabulary size {target} is smaller than the alphabet ({alphabet} symbols)")]
    InvalidSize { target: usize, alphabet: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two artifacts that should describe the same model disagree.
    #[error("inconsistent data: {0}")]
    Inconsistent(String),

    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
}

impl Error {
    pub(crate) fn parse(line: usize, kind: ParseErrorKind) -> Self {
        Error::Parse { line, kind }
    }
}

/// What went wrong while reading one of the plain-text artifact formats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MissingHeader,
    UnknownHeader(String),
    MalformedLine(String),
    UndefinedToken(String),
    BadNumber(String),
    DuplicateEntry(String),
    UnexpectedEof,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::MissingHeader => write!(f, "missing header"),
            ParseErrorKind::UnknownHeader(h) => write!(f, "unknown header {h:?}"),
            ParseErrorKind::MalformedLine(l) => write!(f, "malformed line {l:?}"),
            ParseErrorKind::UndefinedToken(t) => write!(f, "rule references undefined token {t:?}"),
            ParseErrorKind::BadNumber(n) => write!(f, "not a valid count {n:?}"),
            ParseErrorKind::DuplicateEntry(t) => write!(f, "duplicate entry {t:?}"),
            ParseErrorKind::UnexpectedEof => write!(f, "unexpected end of file"),
        }
    }
}
