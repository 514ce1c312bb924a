//! Tokenizer for the SQLite SELECT dialect.

use std::fmt;

use super::error::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Bare word; keywords are recognised by the parser, not here.
    Word(String),
    /// `"x"`, `` `x` `` or `[x]`. Double quotes are ambiguous in SQLite and
    /// are resolved during binding.
    QuotedIdent { text: String, double: bool },
    Str(String),
    Number(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Dot,
    Semicolon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offset into the source text.
    pub offset: usize,
}

impl Token {
    pub fn is_word(&self, kw: &str) -> bool {
        matches!(&self.kind, TokenKind::Word(w) if w.eq_ignore_ascii_case(kw))
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Word(w) => write!(f, "{w}"),
            TokenKind::QuotedIdent { text, .. } => write!(f, "\"{text}\""),
            TokenKind::Str(s) => write!(f, "'{s}'"),
            TokenKind::Number(n) => write!(f, "{n}"),
            TokenKind::Op(op) => write!(f, "{op}"),
            TokenKind::LParen => f.write_str("("),
            TokenKind::RParen => f.write_str(")"),
            TokenKind::Comma => f.write_str(","),
            TokenKind::Dot => f.write_str("."),
            TokenKind::Semicolon => f.write_str(";"),
        }
    }
}

const OPERATORS: &[&str] = &[
    "||", "<=", ">=", "<>", "!=", "==", "<<", ">>", "=", "<", ">", "+", "-", "*", "/", "%", "&",
    "|", "~",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'-' && bytes.get(i + 1) == Some(&b'-') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            match src[i + 2..].find("*/") {
                Some(end) => i = i + 2 + end + 2,
                None => {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        i,
                        "unterminated block comment",
                    ))
                }
            }
            continue;
        }
        let start = i;
        let kind = match c {
            b'(' => {
                i += 1;
                TokenKind::LParen
            }
            b')' => {
                i += 1;
                TokenKind::RParen
            }
            b',' => {
                i += 1;
                TokenKind::Comma
            }
            b';' => {
                i += 1;
                TokenKind::Semicolon
            }
            b'.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                i += 1;
                TokenKind::Dot
            }
            b'\'' => {
                let (text, next) = quoted(src, i, '\'')?;
                i = next;
                TokenKind::Str(text)
            }
            b'"' => {
                let (text, next) = quoted(src, i, '"')?;
                i = next;
                TokenKind::QuotedIdent { text, double: true }
            }
            b'`' => {
                let (text, next) = quoted(src, i, '`')?;
                i = next;
                TokenKind::QuotedIdent {
                    text,
                    double: false,
                }
            }
            b'[' => match src[i + 1..].find(']') {
                Some(end) => {
                    let text = src[i + 1..i + 1 + end].to_string();
                    i = i + 1 + end + 1;
                    TokenKind::QuotedIdent {
                        text,
                        double: false,
                    }
                }
                None => {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        i,
                        "unterminated [identifier]",
                    ))
                }
            },
            b'0'..=b'9' | b'.' => {
                i = number_end(bytes, i);
                if bytes.get(i).is_some_and(|b| is_ident_char(*b)) {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        start,
                        "malformed number",
                    ));
                }
                TokenKind::Number(src[start..i].to_string())
            }
            _ if is_ident_start(c) => {
                while i < bytes.len() && is_ident_char(bytes[i]) {
                    i += 1;
                }
                TokenKind::Word(src[start..i].to_string())
            }
            _ => {
                let rest = &src[i..];
                match OPERATORS.iter().find(|op| rest.starts_with(**op)) {
                    Some(op) => {
                        i += op.len();
                        TokenKind::Op(op)
                    }
                    None => {
                        let ch = rest.chars().next().unwrap_or('?');
                        return Err(ParseError::new(
                            ParseErrorKind::Syntax,
                            i,
                            format!("unexpected character {ch:?}"),
                        ));
                    }
                }
            }
        };
        out.push(Token {
            kind,
            offset: start,
        });
    }
    Ok(out)
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_' || c >= 0x80
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'$' || c >= 0x80
}

fn number_end(bytes: &[u8], mut i: usize) -> usize {
    if bytes[i] == b'0' && matches!(bytes.get(i + 1), Some(b'x' | b'X')) {
        i += 2;
        while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
            i += 1;
        }
        return i;
    }
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if bytes.get(i) == Some(&b'.') {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if matches!(bytes.get(i), Some(b'e' | b'E')) {
        let mut j = i + 1;
        if matches!(bytes.get(j), Some(b'+' | b'-')) {
            j += 1;
        }
        if bytes.get(j).is_some_and(u8::is_ascii_digit) {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

/// Reads a quoted run starting at `start`; a doubled quote is an escaped quote.
fn quoted(src: &str, start: usize, quote: char) -> Result<(String, usize), ParseError> {
    let mut text = String::new();
    let mut chars = src[start + 1..].char_indices().peekable();
    while let Some((off, ch)) = chars.next() {
        if ch == quote {
            if chars.peek().map(|(_, c)| *c) == Some(quote) {
                chars.next();
                text.push(quote);
                continue;
            }
            return Ok((text, start + 1 + off + ch.len_utf8()));
        }
        text.push(ch);
    }
    Err(ParseError::new(
        ParseErrorKind::Syntax,
        start,
        format!("unterminated {quote}-quoted token"),
    ))
}
