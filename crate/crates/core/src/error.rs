use std::fmt;

/// Errors produced anywhere in the core library.
///
/// The variants mirror the failure categories callers need to tell apart:
/// malformed input, bad configuration, values that fail validation, API
/// contract violations and failed name lookups.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown {kind} '{name}' (valid: {})", valid.join(", "))]
    Lookup {
        kind: &'static str,
        name: String,
        valid: Vec<String>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Position of a parse failure inside a text document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    /// 1-based line number (the CSV header is line 1).
    pub line: u64,
    /// Column name, when known.
    pub column: Option<String>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.column {
            Some(c) => write!(f, "line {}, column '{}'", self.line, c),
            None => write!(f, "line {}", self.line),
        }
    }
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
