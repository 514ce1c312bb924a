//! GitHub-style markdown tables.
//!
//! Layout: `| a | b |`, then `| --- | --- |`, then one line per row, each
//! line terminated by `\n`. In names and cells `\` becomes `\\`, `|`
//! becomes `\|`, and CR/LF become the two-character escapes `\r`/`\n`.
//! NULL prints as `NULL`, reals in shortest round-trip form with a decimal
//! point (`3.0`), blobs as `x'0a0b'`.

use std::fmt::Write as _;

use super::{hex_encode, Cell, ResultTable};

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '|' => out.push_str("\\|"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn render_cell(cell: &Cell) -> String {
    match cell {
        Cell::Null => "NULL".to_string(),
        Cell::Integer(i) => i.to_string(),
        Cell::Real(r) => format!("{r:?}"),
        Cell::Text(t) => escape(t),
        Cell::Blob(b) => format!("x'{}'", hex_encode(&b.0)),
    }
}

fn line<I: IntoIterator<Item = String>>(out: &mut String, cells: I) {
    out.push('|');
    for c in cells {
        out.push(' ');
        out.push_str(&c);
        out.push_str(" |");
    }
    out.push('\n');
}

fn render_rows(table: &ResultTable, rows: usize) -> String {
    let mut out = String::new();
    line(&mut out, table.columns.iter().map(|c| escape(c)));
    line(&mut out, table.columns.iter().map(|_| "---".to_string()));
    for row in table.rows.iter().take(rows) {
        line(&mut out, row.iter().map(render_cell));
    }
    out
}

pub fn render_markdown(table: &ResultTable) -> String {
    render_rows(table, table.rows.len())
}

/// Renders at most `cap` rows, followed by a note when rows were dropped.
pub fn render_markdown_capped(table: &ResultTable, cap: usize) -> String {
    let total = table.rows.len();
    if total <= cap && !table.truncated {
        return render_markdown(table);
    }
    let mut out = render_rows(table, cap);
    let shown = cap.min(total);
    if table.truncated {
        let _ = writeln!(out, "(showing the first {shown} rows of more than {total})");
    } else {
        let _ = writeln!(out, "(showing the first {shown} of {total} rows)");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkdownTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct MarkdownError {
    pub line: usize,
    pub message: String,
}

fn split_line(text: &str, line: usize) -> Result<Vec<String>, MarkdownError> {
    let err = |message: &str| MarkdownError {
        line,
        message: message.to_string(),
    };
    let rest = text.strip_prefix('|').ok_or_else(|| err("row must start with '|'"))?;
    let mut cells = Vec::new();
    let mut raw = String::new();
    let mut chars = rest.chars();
    let mut closed = false;
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('\\') => raw.push('\\'),
                Some('|') => raw.push('|'),
                Some('n') => raw.push('\n'),
                Some('r') => raw.push('\r'),
                _ => return Err(err("bad escape")),
            },
            '|' => {
                let cell = raw
                    .strip_prefix(' ')
                    .and_then(|s| s.strip_suffix(' '))
                    .ok_or_else(|| err("cell must be padded by single spaces"))?;
                cells.push(cell.to_string());
                raw.clear();
                closed = true;
                continue;
            }
            c => raw.push(c),
        }
        closed = false;
    }
    if !closed || !raw.is_empty() {
        return Err(err("row must end with '|'"));
    }
    Ok(cells)
}

/// Inverse of [`render_markdown`] for the cell texts.
pub fn parse_markdown(text: &str) -> Result<MarkdownTable, MarkdownError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(MarkdownError {
        line: 1,
        message: "empty input".into(),
    })?;
    let columns = split_line(header, 1)?;
    let (_, sep) = lines.next().ok_or(MarkdownError {
        line: 2,
        message: "missing separator".into(),
    })?;
    let sep_cells = split_line(sep, 2)?;
    if sep_cells.len() != columns.len() || sep_cells.iter().any(|c| c != "---") {
        return Err(MarkdownError {
            line: 2,
            message: "bad separator".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, l) in lines {
        let cells = split_line(l, i + 1)?;
        if cells.len() != columns.len() {
            return Err(MarkdownError {
                line: i + 1,
                message: format!("expected {} cells, found {}", columns.len(), cells.len()),
            });
        }
        rows.push(cells);
    }
    Ok(MarkdownTable { columns, rows })
}
