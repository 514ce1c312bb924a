//! Database schemas: Spider `tables.json` entries, SQLite introspection, and
//! the prompt-facing schema block.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnKey {
    pub table: String,
    pub column: String,
}

impl ColumnKey {
    pub fn new(table: impl Into<String>, column: impl Into<String>) -> Self {
        Self {
            table: table.into(),
            column: column.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub from: ColumnKey,
    pub to: ColumnKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub declared_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    pub name: String,
    pub columns: Vec<ColumnSchema>,
}

impl TableSchema {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.name.eq_ignore_ascii_case(name))
    }
}

/// Names keep their original case for display and compare case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseSchema {
    pub db_id: String,
    pub tables: Vec<TableSchema>,
    pub primary_keys: Vec<ColumnKey>,
    pub foreign_keys: Vec<ForeignKey>,
    pub db_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("schema entry {index} ({db_id}): {message}")]
pub struct SchemaError {
    pub index: usize,
    pub db_id: String,
    pub message: String,
}

impl DatabaseSchema {
    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables
            .iter()
            .position(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn table(&self, name: &str) -> Option<&TableSchema> {
        self.table_index(name).map(|i| &self.tables[i])
    }

    pub fn has_column(&self, table: &str, column: &str) -> bool {
        self.table(table)
            .is_some_and(|t| t.column_index(column).is_some())
    }

    /// Foreign keys linking the two tables, in either direction.
    pub fn foreign_keys_between(&self, a: &str, b: &str) -> Vec<&ForeignKey> {
        self.foreign_keys
            .iter()
            .filter(|fk| {
                (fk.from.table.eq_ignore_ascii_case(a) && fk.to.table.eq_ignore_ascii_case(b))
                    || (fk.from.table.eq_ignore_ascii_case(b)
                        && fk.to.table.eq_ignore_ascii_case(a))
            })
            .collect()
    }

    /// Checks key references and case-insensitive name uniqueness.
    pub fn validate(&self, index: usize) -> Result<(), SchemaError> {
        let fail = |message: String| SchemaError {
            index,
            db_id: self.db_id.clone(),
            message,
        };
        let mut seen = HashSet::new();
        for t in &self.tables {
            if !seen.insert(t.name.to_lowercase()) {
                return Err(fail(format!("duplicate table name {}", t.name)));
            }
            let mut cols = HashSet::new();
            for c in &t.columns {
                if !cols.insert(c.name.to_lowercase()) {
                    return Err(fail(format!("duplicate column {}.{}", t.name, c.name)));
                }
            }
        }
        let check = |k: &ColumnKey, what: &str| {
            if self.has_column(&k.table, &k.column) {
                Ok(())
            } else {
                Err(fail(format!(
                    "{what} references missing column {}.{}",
                    k.table, k.column
                )))
            }
        };
        for pk in &self.primary_keys {
            check(pk, "primary key")?;
        }
        for fk in &self.foreign_keys {
            check(&fk.from, "foreign key")?;
            check(&fk.to, "foreign key")?;
        }
        Ok(())
    }

    /// Renders the schema in the `# table(col, ...)` comment-block layout used in prompts.
    ///
    /// The foreign-key section is omitted when there are no foreign keys.
    pub fn prompt_block(&self) -> String {
        let mut out = String::from("### SQLite SQL tables, with their properties:\n#\n");
        for t in &self.tables {
            let cols: Vec<&str> = t.columns.iter().map(|c| c.name.as_str()).collect();
            let _ = writeln!(out, "# {}({})", t.name, cols.join(", "));
        }
        out.push_str("#\n");
        if !self.foreign_keys.is_empty() {
            out.push_str("### Foreign keys:\n#\n");
            for fk in &self.foreign_keys {
                let _ = writeln!(
                    out,
                    "# {}.{} = {}.{}",
                    fk.from.table, fk.from.column, fk.to.table, fk.to.column
                );
            }
            out.push_str("#\n");
        }
        out
    }

    /// Builds a schema from one `tables.json` entry; the database file is
    /// expected at `<database_dir>/<db_id>/<db_id>.sqlite`.
    pub fn from_spider_entry(
        index: usize,
        entry: &SpiderTablesEntry,
        database_dir: &Path,
    ) -> Result<Self, SchemaError> {
        let fail = |message: String| SchemaError {
            index,
            db_id: entry.db_id.clone(),
            message,
        };
        if entry.column_names_original.len() != entry.column_types.len() {
            return Err(fail(format!(
                "{} column names but {} column types",
                entry.column_names_original.len(),
                entry.column_types.len()
            )));
        }
        let mut tables: Vec<TableSchema> = entry
            .table_names_original
            .iter()
            .map(|name| TableSchema {
                name: name.clone(),
                columns: Vec::new(),
            })
            .collect();
        // Column 0 is the `*` placeholder with table index -1.
        let mut keys: Vec<Option<ColumnKey>> = Vec::with_capacity(entry.column_names_original.len());
        for (i, ((table_idx, col), ty)) in entry
            .column_names_original
            .iter()
            .zip(&entry.column_types)
            .enumerate()
        {
            if *table_idx < 0 {
                keys.push(None);
                continue;
            }
            let t = usize::try_from(*table_idx)
                .ok()
                .and_then(|t| tables.get_mut(t))
                .ok_or_else(|| fail(format!("column {i} points at missing table {table_idx}")))?;
            t.columns.push(ColumnSchema {
                name: col.clone(),
                declared_type: ty.clone(),
            });
            keys.push(Some(ColumnKey::new(t.name.clone(), col.clone())));
        }
        let key_at = |i: usize| -> Result<ColumnKey, SchemaError> {
            keys.get(i)
                .cloned()
                .flatten()
                .ok_or_else(|| fail(format!("key refers to invalid column index {i}")))
        };
        let mut primary_keys = Vec::new();
        for pk in &entry.primary_keys {
            match pk {
                SpiderPrimaryKey::Single(i) => primary_keys.push(key_at(*i)?),
                SpiderPrimaryKey::Composite(list) => {
                    for i in list {
                        primary_keys.push(key_at(*i)?);
                    }
                }
            }
        }
        let foreign_keys = entry
            .foreign_keys
            .iter()
            .map(|(from, to)| {
                Ok(ForeignKey {
                    from: key_at(*from)?,
                    to: key_at(*to)?,
                })
            })
            .collect::<Result<Vec<_>, SchemaError>>()?;
        let schema = DatabaseSchema {
            db_id: entry.db_id.clone(),
            tables,
            primary_keys,
            foreign_keys,
            db_path: database_dir
                .join(&entry.db_id)
                .join(format!("{}.sqlite", entry.db_id)),
        };
        schema.validate(index)?;
        Ok(schema)
    }

    /// Reads the schema straight from a SQLite file.
    pub fn introspect(db_id: &str, db_path: &Path) -> Result<Self, rusqlite::Error> {
        let conn = rusqlite::Connection::open_with_flags(
            db_path,
            rusqlite::OpenFlags::SQLITE_OPEN_READ_ONLY | rusqlite::OpenFlags::SQLITE_OPEN_NO_MUTEX,
        )?;
        let mut names: Vec<String> = conn
            .prepare(
                "SELECT name FROM sqlite_master WHERE type = 'table' \
                 AND name NOT LIKE 'sqlite_%' ORDER BY rowid",
            )?
            .query_map([], |r| r.get(0))?
            .collect::<Result<_, _>>()?;
        names.dedup();
        let mut tables = Vec::new();
        let mut primary_keys = Vec::new();
        let mut foreign_keys = Vec::new();
        for name in names {
            let mut columns = Vec::new();
            let mut pk_cols: Vec<(i64, String)> = Vec::new();
            let mut stmt = conn.prepare(&format!("PRAGMA table_info(\"{}\")", name.replace('"', "\"\"")))?;
            let mut rows = stmt.query([])?;
            while let Some(row) = rows.next()? {
                let col: String = row.get(1)?;
                let ty: String = row.get(2)?;
                let pk: i64 = row.get(5)?;
                if pk > 0 {
                    pk_cols.push((pk, col.clone()));
                }
                columns.push(ColumnSchema {
                    name: col,
                    declared_type: ty,
                });
            }
            pk_cols.sort();
            primary_keys.extend(pk_cols.into_iter().map(|(_, c)| ColumnKey::new(name.clone(), c)));
            let mut stmt = conn.prepare(&format!(
                "PRAGMA foreign_key_list(\"{}\")",
                name.replace('"', "\"\"")
            ))?;
            let mut rows = stmt.query([])?;
            let mut fks = Vec::new();
            while let Some(row) = rows.next()? {
                let id: i64 = row.get(0)?;
                let seq: i64 = row.get(1)?;
                let target: String = row.get(2)?;
                let from: String = row.get(3)?;
                let to: Option<String> = row.get(4)?;
                fks.push((id, seq, target, from, to));
            }
            // SQLite numbers foreign keys last-declared first.
            fks.sort_by_key(|f| (std::cmp::Reverse(f.0), f.1));
            for (_, _, target, from, to) in fks {
                let to = to.unwrap_or_else(|| from.clone());
                foreign_keys.push(ForeignKey {
                    from: ColumnKey::new(name.clone(), from),
                    to: ColumnKey::new(target, to),
                });
            }
            tables.push(TableSchema { name, columns });
        }
        // Resolve foreign-key targets to the declared table casing.
        for fk in &mut foreign_keys {
            if let Some(t) = tables.iter().find(|t| t.name.eq_ignore_ascii_case(&fk.to.table)) {
                fk.to.table = t.name.clone();
                if let Some(c) = t.columns.iter().find(|c| c.name.eq_ignore_ascii_case(&fk.to.column)) {
                    fk.to.column = c.name.clone();
                }
            }
        }
        Ok(DatabaseSchema {
            db_id: db_id.to_string(),
            tables,
            primary_keys,
            foreign_keys,
            db_path: db_path.to_path_buf(),
        })
    }

    /// Converts back to the `tables.json` layout.
    pub fn to_spider_entry(&self) -> SpiderTablesEntry {
        let mut column_names_original = vec![(-1i64, "*".to_string())];
        let mut column_types = vec!["text".to_string()];
        let mut index_of = Vec::new();
        for (ti, t) in self.tables.iter().enumerate() {
            for c in &t.columns {
                index_of.push((t.name.to_lowercase(), c.name.to_lowercase(), column_names_original.len()));
                column_names_original.push((ti as i64, c.name.clone()));
                column_types.push(spider_type(&c.declared_type).to_string());
            }
        }
        let find = |k: &ColumnKey| {
            let (t, c) = (k.table.to_lowercase(), k.column.to_lowercase());
            index_of
                .iter()
                .find(|(tt, cc, _)| *tt == t && *cc == c)
                .map(|(_, _, i)| *i)
                .unwrap_or(0)
        };
        SpiderTablesEntry {
            db_id: self.db_id.clone(),
            table_names_original: self.tables.iter().map(|t| t.name.clone()).collect(),
            table_names: self.tables.iter().map(|t| natural_name(&t.name)).collect(),
            column_names_original: column_names_original.clone(),
            column_names: column_names_original
                .iter()
                .map(|(t, c)| (*t, if *t < 0 { c.clone() } else { natural_name(c) }))
                .collect(),
            column_types,
            primary_keys: self
                .primary_keys
                .iter()
                .map(|k| SpiderPrimaryKey::Single(find(k)))
                .collect(),
            foreign_keys: self
                .foreign_keys
                .iter()
                .map(|fk| (find(&fk.from), find(&fk.to)))
                .collect(),
        }
    }
}

fn spider_type(declared: &str) -> &'static str {
    let d = declared.to_ascii_lowercase();
    if d.contains("int") || d.contains("real") || d.contains("num") || d.contains("dec")
        || d.contains("float") || d.contains("double")
    {
        "number"
    } else if d.contains("date") || d.contains("time") {
        "time"
    } else if d.contains("bool") {
        "boolean"
    } else if d.is_empty() || d.contains("char") || d.contains("text") || d.contains("clob") {
        "text"
    } else {
        "others"
    }
}

fn natural_name(name: &str) -> String {
    name.replace('_', " ").to_lowercase()
}

/// One entry of Spider's `tables.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiderTablesEntry {
    pub db_id: String,
    pub table_names_original: Vec<String>,
    #[serde(default)]
    pub table_names: Vec<String>,
    pub column_names_original: Vec<(i64, String)>,
    #[serde(default)]
    pub column_names: Vec<(i64, String)>,
    pub column_types: Vec<String>,
    #[serde(default)]
    pub primary_keys: Vec<SpiderPrimaryKey>,
    #[serde(default)]
    pub foreign_keys: Vec<(usize, usize)>,
}

/// Newer Spider releases list composite keys as nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpiderPrimaryKey {
    Single(usize),
    Composite(Vec<usize>),
}

/// Parses a whole `tables.json` document.
pub fn parse_tables_json(text: &str) -> Result<Vec<SpiderTablesEntry>, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry() -> SpiderTablesEntry {
        serde_json::from_str(
            r#"{
              "db_id": "shop",
              "table_names_original": ["Customer", "Orders"],
              "column_names_original": [[-1, "*"], [0, "id"], [0, "name"], [1, "order_id"], [1, "customer_id"]],
              "column_types": ["text", "number", "text", "number", "number"],
              "primary_keys": [1, [3]],
              "foreign_keys": [[4, 1]]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn builds_from_spider_entry() {
        let s = DatabaseSchema::from_spider_entry(0, &entry(), Path::new("/data/database")).unwrap();
        assert_eq!(s.tables.len(), 2);
        assert_eq!(s.tables[1].columns[1].name, "customer_id");
        assert_eq!(s.primary_keys, vec![ColumnKey::new("Customer", "id"), ColumnKey::new("Orders", "order_id")]);
        assert_eq!(s.foreign_keys[0].to, ColumnKey::new("Customer", "id"));
        assert_eq!(s.db_path, Path::new("/data/database/shop/shop.sqlite"));
        assert!(s.has_column("customer", "NAME"));
    }

    #[test]
    fn rejects_bad_key_index() {
        let mut e = entry();
        e.foreign_keys.push((4, 99));
        let err = DatabaseSchema::from_spider_entry(7, &e, Path::new("x")).unwrap_err();
        assert_eq!(err.index, 7);
    }

    #[test]
    fn rejects_case_insensitive_duplicates() {
        let mut e = entry();
        e.table_names_original[1] = "CUSTOMER".into();
        assert!(DatabaseSchema::from_spider_entry(0, &e, Path::new("x")).is_err());
    }

    #[test]
    fn prompt_block_omits_fk_section_without_fks() {
        let mut s = DatabaseSchema::from_spider_entry(0, &entry(), Path::new("x")).unwrap();
        assert!(s.prompt_block().contains("### Foreign keys"));
        s.foreign_keys.clear();
        let block = s.prompt_block();
        assert!(!block.contains("Foreign keys"));
        assert_eq!(
            block,
            "### SQLite SQL tables, with their properties:\n#\n# Customer(id, name)\n# Orders(order_id, customer_id)\n#\n"
        );
    }

    #[test]
    fn spider_entry_round_trip() {
        let s = DatabaseSchema::from_spider_entry(0, &entry(), Path::new("x")).unwrap();
        let back = DatabaseSchema::from_spider_entry(0, &s.to_spider_entry(), Path::new("x")).unwrap();
        assert_eq!(back.tables, s.tables.iter().map(|t| TableSchema {
            name: t.name.clone(),
            columns: t.columns.iter().map(|c| ColumnSchema {
                name: c.name.clone(),
                declared_type: spider_type(&c.declared_type).to_string(),
            }).collect(),
        }).collect::<Vec<_>>());
        assert_eq!(back.foreign_keys, s.foreign_keys);
    }
}
