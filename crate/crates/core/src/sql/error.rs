use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    Syntax,
    UnknownTable,
    UnknownColumn,
    /// DML, DDL, CTEs and other statements outside the SELECT subset.
    Unsupported,
    /// Aggregate used where SQL forbids it (e.g. inside WHERE).
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset of the offending token, when known.
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, offset: usize, message: impl Into<String>) -> Self {
        Self {
            kind,
            offset,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::UnknownTable => "unknown table",
            ParseErrorKind::UnknownColumn => "unknown column",
            ParseErrorKind::Unsupported => "unsupported construct",
            ParseErrorKind::Invalid => "invalid query",
        };
        write!(f, "{kind} at offset {}: {}", self.offset, self.message)
    }
}
