//! Pulling the SQL statement out of a model reply.

use spidereval_core::corpus::SKELETON_SEPARATOR;
use spidereval_core::sql::lexer::{tokenize, TokenKind};
use spidereval_core::sql::parse_unbound;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no SQL statement found in the reply")]
pub struct NoSqlFound;

/// First fenced code block, if any.
fn fenced(reply: &str) -> Option<&str> {
    let start = reply.find("```")?;
    let after = &reply[start + 3..];
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
    let info = after[..body_start].trim();
    let body = if info.chars().all(|c| c.is_ascii_alphanumeric()) {
        &after[body_start..]
    } else {
        after
    };
    Some(body.find("```").map_or(body, |end| &body[..end]))
}

fn is_statement_start(word: &str) -> bool {
    word.eq_ignore_ascii_case("select") || word.eq_ignore_ascii_case("with")
}

/// Byte offsets where a SELECT/WITH keyword begins a candidate statement.
fn starts(text: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    for (i, _) in text.char_indices() {
        let boundary = i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_');
        if !boundary {
            continue;
        }
        let word: String = text[i..]
            .chars()
            .take_while(|c| c.is_ascii_alphabetic())
            .collect();
        let next = text[i + word.len()..].chars().next();
        if is_statement_start(&word)
            && !matches!(next, Some(c) if c.is_ascii_alphanumeric() || c == '_')
        {
            out.push(i);
        }
    }
    out
}

/// Cuts the candidate at the first top-level `;`.
fn until_semicolon(candidate: &str) -> &str {
    match tokenize(candidate) {
        Ok(tokens) => tokens
            .iter()
            .find(|t| t.kind == TokenKind::Semicolon)
            .map_or(candidate, |t| &candidate[..t.offset]),
        Err(_) => candidate.find(';').map_or(candidate, |i| &candidate[..i]),
    }
}

fn looks_like_skeleton(candidate: &str) -> bool {
    candidate
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .any(|w| w == "_")
}

/// Longest line-prefix of `candidate` that parses, dropping trailing prose.
fn parsable_prefix(candidate: &str) -> Option<String> {
    let lines: Vec<&str> = candidate.lines().collect();
    (1..=lines.len()).rev().find_map(|k| {
        let text = lines[..k].join("\n");
        let text = text.trim();
        parse_unbound(text).is_ok().then(|| text.to_string())
    })
}

/// Extracts the first SQL statement from a reply: the first fenced block if
/// there is one, else the reply itself; after a skeleton separator only the
/// query part counts. Trailing prose is dropped. A statement the parser
/// does not understand is still returned (up to the first `;` or blank
/// line) so that the engine can judge it.
pub fn extract_sql(reply: &str) -> Result<String, NoSqlFound> {
    let mut text = fenced(reply).unwrap_or(reply);
    if let Some(i) = text.rfind(SKELETON_SEPARATOR) {
        text = &text[i + SKELETON_SEPARATOR.len()..];
    }
    let candidates: Vec<&str> = starts(text)
        .into_iter()
        .map(|i| until_semicolon(&text[i..]))
        .filter(|c| !looks_like_skeleton(c))
        .collect();
    for c in &candidates {
        if let Some(sql) = parsable_prefix(c) {
            return Ok(sql);
        }
    }
    let first = candidates.first().ok_or(NoSqlFound)?;
    let para = first.split("\n\n").next().unwrap_or(first).trim();
    if para.is_empty() {
        Err(NoSqlFound)
    } else {
        Ok(para.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_query() {
        assert_eq!(
            extract_sql("SELECT count(*) FROM singer").unwrap(),
            "SELECT count(*) FROM singer"
        );
        assert_eq!(extract_sql("  SELECT 1;  ").unwrap(), "SELECT 1");
    }

    #[test]
    fn fenced_block_with_prose() {
        let reply = "Here you go:\n```sql\nSELECT name\nFROM singer\nWHERE age > 30;\n```\nThis selects singers older than 30.";
        assert_eq!(
            extract_sql(reply).unwrap(),
            "SELECT name\nFROM singer\nWHERE age > 30"
        );
        let plain = "```\nSELECT 1\n```";
        assert_eq!(extract_sql(plain).unwrap(), "SELECT 1");
    }

    #[test]
    fn trailing_prose_without_fence() {
        let reply =
            "SELECT name FROM singer ORDER BY age DESC LIMIT 1\nThis returns the oldest singer.";
        assert_eq!(
            extract_sql(reply).unwrap(),
            "SELECT name FROM singer ORDER BY age DESC LIMIT 1"
        );
    }

    #[test]
    fn skeleton_then_query() {
        let reply = "SELECT _ FROM _ WHERE _ = _ ||| SELECT name FROM battle WHERE result = 'x'";
        assert_eq!(
            extract_sql(reply).unwrap(),
            "SELECT name FROM battle WHERE result = 'x'"
        );
        let two_lines = "Skeleton: SELECT _ FROM _\nQuery: SELECT name FROM ship";
        assert_eq!(extract_sql(two_lines).unwrap(), "SELECT name FROM ship");
    }

    #[test]
    fn prose_before_query() {
        let reply = "To answer, select the rows:\nSELECT id FROM t WHERE x = 'selected'";
        assert_eq!(
            extract_sql(reply).unwrap(),
            "SELECT id FROM t WHERE x = 'selected'"
        );
    }

    #[test]
    fn unknown_dialect_is_passed_through() {
        let reply = "SELECT a FROM t QUALIFY row_number() OVER () = 1\n\nExplanation follows.";
        assert_eq!(
            extract_sql(reply).unwrap(),
            "SELECT a FROM t QUALIFY row_number() OVER () = 1"
        );
    }

    #[test]
    fn nothing_to_extract() {
        assert_eq!(extract_sql("I cannot answer that."), Err(NoSqlFound));
        assert_eq!(extract_sql(""), Err(NoSqlFound));
        assert_eq!(extract_sql("selection is hard"), Err(NoSqlFound));
    }
}
