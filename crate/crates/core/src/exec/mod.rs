//! Read-only query execution against a Spider SQLite file.

pub mod equivalence;
pub mod markdown;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rusqlite::types::ValueRef;
use rusqlite::{Connection, ErrorCode, OpenFlags};
use serde::{Deserialize, Serialize};

use crate::schema::DatabaseSchema;
use crate::sql::lexer::{tokenize, TokenKind};
use crate::sql::parse_unbound;

pub use equivalence::{compare_tables, tables_equivalent, Equivalence, EquivalenceOptions, Mismatch};
pub use markdown::{parse_markdown, render_markdown, render_markdown_capped};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Blob(BlobCell),
}

/// Blob bytes, serialized as `{"blob": "<hex>"}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlobCell(pub Vec<u8>);

impl Serialize for BlobCell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(1))?;
        m.serialize_entry("blob", &hex_encode(&self.0))?;
        m.end()
    }
}

impl<'de> Deserialize<'de> for BlobCell {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            blob: String,
        }
        let raw = Raw::deserialize(d)?;
        hex_decode(&raw.blob)
            .map(BlobCell)
            .ok_or_else(|| serde::de::Error::custom("blob is not valid hex"))
    }
}

pub(crate) fn hex_encode(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn hex_decode(s: &str) -> Option<Vec<u8>> {
    if s.len() % 2 != 0 || !s.is_ascii() {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).ok())
        .collect()
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Integer(i) => Some(*i as f64),
            Cell::Real(r) => Some(*r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// The producing query has a top-level ORDER BY.
    pub ordered: bool,
    pub truncated: bool,
    pub row_limit_applied: Option<usize>,
}

impl ResultTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Cell>>, ordered: bool) -> Self {
        ResultTable {
            columns,
            rows,
            ordered,
            truncated: false,
            row_limit_applied: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Syntax,
    NoSuchTable,
    NoSuchColumn,
    AmbiguousColumn,
    NoSuchFunction,
    Misuse,
    ReadOnly,
    MultipleStatements,
    Other,
}

impl ErrorClass {
    pub fn from_message(message: &str) -> Self {
        let m = message.to_ascii_lowercase();
        if m.contains("no such table") {
            ErrorClass::NoSuchTable
        } else if m.contains("no such column") {
            ErrorClass::NoSuchColumn
        } else if m.contains("ambiguous column") {
            ErrorClass::AmbiguousColumn
        } else if m.contains("no such function") {
            ErrorClass::NoSuchFunction
        } else if m.contains("syntax error")
            || m.contains("incomplete input")
            || m.contains("unrecognized token")
        {
            ErrorClass::Syntax
        } else if m.contains("misuse") || m.contains("wrong number of arguments") {
            ErrorClass::Misuse
        } else if m.contains("readonly") || m.contains("read-only") || m.contains("query_only") {
            ErrorClass::ReadOnly
        } else if m.contains("multiple statements") {
            ErrorClass::MultipleStatements
        } else {
            ErrorClass::Other
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExecOutcome {
    Table(ResultTable),
    ExecError { message: String, class: ErrorClass },
    Timeout,
}

impl ExecOutcome {
    pub fn table(&self) -> Option<&ResultTable> {
        match self {
            ExecOutcome::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn error_message(&self) -> Option<&str> {
        match self {
            ExecOutcome::ExecError { message, .. } => Some(message),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecLimits {
    #[serde(with = "duration_secs")]
    pub timeout: Duration,
    pub max_rows: usize,
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits {
            timeout: Duration::from_secs(30),
            max_rows: 10_000,
        }
    }
}

/// Failures of the harness itself, as opposed to the query.
#[derive(Debug, thiserror::Error)]
pub enum HarnessFault {
    #[error("database file not found: {0}")]
    MissingDatabase(PathBuf),
    #[error("cannot open database {path}: {message}")]
    Open { path: PathBuf, message: String },
}

pub fn execute(
    sql: &str,
    schema: &DatabaseSchema,
    limits: ExecLimits,
) -> Result<ExecOutcome, HarnessFault> {
    execute_at(&schema.db_path, sql, limits)
}

pub fn open_read_only(path: &Path) -> Result<Connection, HarnessFault> {
    if !path.is_file() {
        return Err(HarnessFault::MissingDatabase(path.to_path_buf()));
    }
    let open_err = |e: rusqlite::Error| HarnessFault::Open {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let conn = Connection::open_with_flags(
        path,
        OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
    )
    .map_err(open_err)?;
    conn.pragma_update(None, "query_only", true).map_err(open_err)?;
    Ok(conn)
}

pub fn execute_at(path: &Path, sql: &str, limits: ExecLimits) -> Result<ExecOutcome, HarnessFault> {
    let conn = open_read_only(path)?;
    Ok(execute_on(&conn, sql, limits))
}

/// Runs `sql` on an open connection. Fetches one row past the cap to
/// detect truncation.
pub fn execute_on(conn: &Connection, sql: &str, limits: ExecLimits) -> ExecOutcome {
    let deadline = Instant::now() + limits.timeout;
    conn.progress_handler(1000, Some(move || Instant::now() >= deadline));
    let result = fetch(conn, sql, limits.max_rows);
    conn.progress_handler(0, None::<fn() -> bool>);
    match result {
        Ok((columns, mut rows)) => {
            let truncated = rows.len() > limits.max_rows;
            rows.truncate(limits.max_rows);
            ExecOutcome::Table(ResultTable {
                columns,
                rows,
                ordered: query_is_ordered(sql),
                truncated,
                row_limit_applied: truncated.then_some(limits.max_rows),
            })
        }
        Err(e) if is_interrupt(&e) && Instant::now() >= deadline => ExecOutcome::Timeout,
        Err(e) => {
            let message = engine_message(&e);
            ExecOutcome::ExecError {
                class: ErrorClass::from_message(&message),
                message,
            }
        }
    }
}

type Fetched = (Vec<String>, Vec<Vec<Cell>>);

fn fetch(conn: &Connection, sql: &str, max_rows: usize) -> rusqlite::Result<Fetched> {
    let mut stmt = conn.prepare(sql)?;
    let columns: Vec<String> = stmt.column_names().into_iter().map(String::from).collect();
    let width = columns.len();
    let mut rows = stmt.query([])?;
    let mut out = Vec::new();
    while let Some(row) = rows.next()? {
        let mut cells = Vec::with_capacity(width);
        for i in 0..width {
            cells.push(match row.get_ref(i)? {
                ValueRef::Null => Cell::Null,
                ValueRef::Integer(v) => Cell::Integer(v),
                ValueRef::Real(v) => Cell::Real(v),
                ValueRef::Text(t) => Cell::Text(String::from_utf8_lossy(t).into_owned()),
                ValueRef::Blob(b) => Cell::Blob(BlobCell(b.to_vec())),
            });
        }
        out.push(cells);
        if out.len() > max_rows {
            break;
        }
    }
    Ok((columns, out))
}

fn is_interrupt(e: &rusqlite::Error) -> bool {
    matches!(e, rusqlite::Error::SqliteFailure(f, _) if f.code == ErrorCode::OperationInterrupted)
}

/// The engine's own message, without wrapper text.
fn engine_message(e: &rusqlite::Error) -> String {
    match e {
        rusqlite::Error::SqliteFailure(_, Some(msg)) => msg.clone(),
        rusqlite::Error::SqlInputError { msg, .. } => msg.clone(),
        rusqlite::Error::MultipleStatement => "multiple statements provided".to_string(),
        other => other.to_string(),
    }
}

/// Whether the statement ends in a top-level ORDER BY. Falls back to a token
/// scan when the query is outside the parsed dialect.
pub fn query_is_ordered(sql: &str) -> bool {
    if let Ok(ast) = parse_unbound(sql) {
        return ast.has_order_by();
    }
    let Ok(tokens) = tokenize(sql) else {
        return false;
    };
    let mut depth = 0usize;
    let mut prev_order = false;
    for t in &tokens {
        match &t.kind {
            TokenKind::LParen => depth += 1,
            TokenKind::RParen => depth = depth.saturating_sub(1),
            _ => {}
        }
        if depth == 0 && prev_order && t.is_word("by") {
            return true;
        }
        prev_order = depth == 0 && t.is_word("order");
    }
    false
}

/// Executes both queries for comparison. A truncated result is retried once
/// with ten times the row cap before the caller has to call it inconclusive.
pub fn execute_for_comparison(
    path: &Path,
    sql: &str,
    limits: ExecLimits,
) -> Result<ExecOutcome, HarnessFault> {
    let first = execute_at(path, sql, limits)?;
    match &first {
        ExecOutcome::Table(t) if t.truncated => {
            let raised = ExecLimits {
                max_rows: limits.max_rows.saturating_mul(10),
                ..limits
            };
            execute_at(path, sql, raised)
        }
        _ => Ok(first),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db() -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.sqlite");
        let conn = Connection::open(&path).unwrap();
        conn.execute_batch(
            "CREATE TABLE t(a INTEGER, b TEXT, c REAL, d BLOB);
             INSERT INTO t VALUES (1, 'x', 1.5, x'0a0b'), (2, NULL, 3.0, NULL), (3, 'y|z', NULL, NULL);",
        )
        .unwrap();
        (dir, path)
    }

    #[test]
    fn reads_all_cell_kinds() {
        let (_d, path) = db();
        let out = execute_at(&path, "SELECT a, b, c, d FROM t ORDER BY a", ExecLimits::default()).unwrap();
        let t = out.table().unwrap();
        assert!(t.ordered);
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[0][3], Cell::Blob(BlobCell(vec![10, 11])));
        assert_eq!(t.rows[1][1], Cell::Null);
        assert_eq!(t.rows[1][2], Cell::Real(3.0));
    }

    #[test]
    fn missing_table_is_an_exec_error() {
        let (_d, path) = db();
        let out = execute_at(&path, "SELECT * FROM no_such_table", ExecLimits::default()).unwrap();
        match out {
            ExecOutcome::ExecError { message, class } => {
                assert_eq!(message, "no such table: no_such_table");
                assert_eq!(class, ErrorClass::NoSuchTable);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_database_is_a_fault() {
        let err = execute_at(Path::new("/nonexistent/x.sqlite"), "SELECT 1", ExecLimits::default());
        assert!(matches!(err, Err(HarnessFault::MissingDatabase(_))));
    }

    #[test]
    fn writes_are_rejected() {
        let (_d, path) = db();
        let out = execute_at(&path, "DELETE FROM t", ExecLimits::default()).unwrap();
        assert!(matches!(out, ExecOutcome::ExecError { .. }), "{out:?}");
        let out = execute_at(&path, "SELECT count(*) FROM t", ExecLimits::default()).unwrap();
        assert_eq!(out.table().unwrap().rows[0][0], Cell::Integer(3));
    }

    #[test]
    fn row_cap_flags_truncation() {
        let (_d, path) = db();
        let limits = ExecLimits {
            max_rows: 2,
            ..Default::default()
        };
        let t = execute_at(&path, "SELECT a FROM t", limits).unwrap();
        let t = t.table().unwrap();
        assert!(t.truncated);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.row_limit_applied, Some(2));
        let t = execute_for_comparison(&path, "SELECT a FROM t", limits).unwrap();
        assert!(!t.table().unwrap().truncated);
    }

    #[test]
    fn runaway_query_times_out() {
        let (_d, path) = db();
        let limits = ExecLimits {
            timeout: Duration::from_millis(100),
            max_rows: 10,
        };
        let sql = "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) \
                   SELECT count(*) FROM c";
        assert_eq!(execute_at(&path, sql, limits).unwrap(), ExecOutcome::Timeout);
    }

    #[test]
    fn ordering_detection() {
        assert!(query_is_ordered("SELECT a FROM t ORDER BY a"));
        assert!(!query_is_ordered("SELECT a FROM (SELECT a FROM t ORDER BY a)"));
        assert!(query_is_ordered("WITH x AS (SELECT 1) SELECT * FROM x ORDER BY 1"));
        assert!(!query_is_ordered("SELECT 'order by' FROM t"));
    }

    #[test]
    fn cells_serialize_compactly() {
        let row = vec![
            Cell::Null,
            Cell::Integer(1),
            Cell::Real(1.0),
            Cell::Text("a".into()),
            Cell::Blob(BlobCell(vec![255])),
        ];
        let json = serde_json::to_string(&row).unwrap();
        assert_eq!(json, r#"[null,1,1.0,"a",{"blob":"ff"}]"#);
        let back: Vec<Cell> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, row);
    }
}
