//! The checked-in SQLite files and `tables.json` must match their `.sql` sources.
//! Run with `REGENERATE_FIXTURES=1 cargo test -p spidereval-core --test fixtures`
//! after editing a source.

mod common;

use std::fs;
use std::path::Path;

use rusqlite::types::Value;
use rusqlite::Connection;
use spidereval_core::schema::{parse_tables_json, DatabaseSchema};

use common::{spider_mini, FIXTURE_DBS};

fn dump(conn: &Connection) -> Vec<(String, Vec<Vec<Value>>)> {
    let tables: Vec<(String, String)> = conn
        .prepare("SELECT name, sql FROM sqlite_master WHERE type = 'table' ORDER BY rowid")
        .unwrap()
        .query_map([], |r| Ok((r.get(0)?, r.get(1)?)))
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap();
    tables
        .into_iter()
        .map(|(name, sql)| {
            let mut stmt = conn.prepare(&format!("SELECT * FROM \"{name}\"")).unwrap();
            let n = stmt.column_count();
            let rows = stmt
                .query_map([], |r| (0..n).map(|i| r.get::<_, Value>(i)).collect())
                .unwrap()
                .collect::<Result<Vec<Vec<Value>>, _>>()
                .unwrap();
            (sql, rows)
        })
        .collect()
}

fn load(conn: &Connection, sql_path: &Path) {
    // Spider data does not always honour its declared foreign keys.
    conn.execute_batch("PRAGMA foreign_keys = OFF;").unwrap();
    conn.execute_batch(&fs::read_to_string(sql_path).unwrap()).unwrap();
}

fn build(sql_path: &Path, db_path: &Path) {
    if db_path.exists() {
        fs::remove_file(db_path).unwrap();
    }
    load(&Connection::open(db_path).unwrap(), sql_path);
}

fn paths(db: &str) -> (std::path::PathBuf, std::path::PathBuf) {
    let dir = spider_mini().join("database").join(db);
    (dir.join(format!("{db}.sql")), dir.join(format!("{db}.sqlite")))
}

fn introspected_tables_json() -> String {
    let entries: Vec<_> = FIXTURE_DBS
        .iter()
        .map(|db| {
            DatabaseSchema::introspect(db, &paths(db).1)
                .unwrap()
                .to_spider_entry()
        })
        .collect();
    serde_json::to_string_pretty(&entries).unwrap() + "\n"
}

#[test]
fn sqlite_files_match_sources() {
    let regen = std::env::var_os("REGENERATE_FIXTURES").is_some();
    for db in FIXTURE_DBS {
        let (sql, file) = paths(db);
        if regen {
            build(&sql, &file);
        }
        let fresh = Connection::open_in_memory().unwrap();
        load(&fresh, &sql);
        let stored = Connection::open(&file).unwrap();
        assert_eq!(dump(&stored), dump(&fresh), "{db}.sqlite is stale");
    }
    let tables = spider_mini().join("tables.json");
    if regen {
        fs::write(&tables, introspected_tables_json()).unwrap();
    }
    let on_disk = parse_tables_json(&fs::read_to_string(tables).unwrap()).unwrap();
    let expected = parse_tables_json(&introspected_tables_json()).unwrap();
    assert_eq!(on_disk, expected, "tables.json is stale");
}
