use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Why a single input line could not be turned into an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    EmptyLine,
    BadPriority(String),
    PriorityOutOfRange(u32),
    BadTimestamp(String),
    MissingHost,
    EmptyMessage,
    BadEventId(String),
    MissingField(&'static str),
    NotMailer(String),
    Csv(String),
    Json(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::EmptyLine => write!(f, "empty line"),
            ParseErrorKind::BadPriority(s) => write!(f, "malformed priority {s:?}"),
            ParseErrorKind::PriorityOutOfRange(p) => write!(f, "priority {p} outside 0..=191"),
            ParseErrorKind::BadTimestamp(s) => write!(f, "unparseable timestamp {s:?}"),
            ParseErrorKind::MissingHost => write!(f, "missing host name"),
            ParseErrorKind::EmptyMessage => write!(f, "empty message"),
            ParseErrorKind::BadEventId(s) => write!(f, "event id {s:?} is not a non-negative integer"),
            ParseErrorKind::MissingField(name) => write!(f, "row has no {name} cell"),
            ParseErrorKind::NotMailer(tag) => write!(f, "source {tag:?} is not a mailer tag"),
            ParseErrorKind::Csv(s) => write!(f, "csv: {s}"),
            ParseErrorKind::Json(s) => write!(f, "json: {s}"),
        }
    }
}

/// A rejected input line. `line` is 1-based; 0 means the parser was called
/// outside of a file context.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind) -> Self {
        ParseError { line: 0, kind }
    }

    pub fn at_line(mut self, line: usize) -> Self {
        self.line = line;
        self
    }
}

impl From<ParseErrorKind> for ParseError {
    fn from(kind: ParseErrorKind) -> Self {
        ParseError::new(kind)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {reason}", path.display())]
    Config { path: PathBuf, reason: String },
    #[error("{}:{line}: {reason}", path.display())]
    Store { path: PathBuf, line: usize, reason: String },
    #[error("rule file line {line}: {reason}")]
    Rule { line: usize, reason: String },
    #[error("{0}")]
    Argument(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
