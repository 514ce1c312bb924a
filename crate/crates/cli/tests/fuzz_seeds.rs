//! Runs every checked-in fuzz seed through its entry point on stable.

use std::fs;
use std::path::{Path, PathBuf};

use spidereval_cli::config::Config;
use spidereval_core::dataset::RawExample;
use spidereval_core::exec::parse_markdown;
use spidereval_core::hardness::classify_hardness;
use spidereval_core::schema::{parse_tables_json, DatabaseSchema};
use spidereval_core::sql::{canonicalize, diff, parse_unbound, to_sql};
use spidereval_pipeline::chat::{parse_chat_response, response_body};
use spidereval_pipeline::extract_sql;
use spidereval_pipeline::transcript::{parse_line, to_line};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn sql_parse_seeds_round_trip() {
    let mut parsed = 0;
    for (path, text) in seeds("sql_parse") {
        let Ok(ast) = parse_unbound(&text) else { continue };
        parsed += 1;
        let printed = to_sql(&ast);
        let again = parse_unbound(&printed).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(to_sql(&again), printed, "{}", path.display());
        let canon = canonicalize(&ast);
        assert!(diff(&canon, &canon).is_empty());
        let _ = classify_hardness(&ast);
    }
    assert!(parsed >= 25);
}

#[test]
fn tables_json_seeds_load() {
    for (path, text) in seeds("tables_json") {
        let entries = parse_tables_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        for (i, e) in entries.iter().enumerate() {
            let schema = DatabaseSchema::from_spider_entry(i, e, Path::new("/nonexistent")).unwrap();
            assert!(!schema.prompt_block().is_empty());
        }
    }
}

#[test]
fn split_file_seeds_load() {
    for (path, text) in seeds("split_file") {
        serde_json::from_str::<Vec<RawExample>>(&text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn extract_sql_seeds_return_substrings() {
    for (_, text) in seeds("extract_sql") {
        if let Ok(sql) = extract_sql(&text) {
            assert!(text.contains(sql.lines().next().unwrap_or_default()));
        }
    }
}

#[test]
fn markdown_seeds_are_rectangular() {
    for (path, text) in seeds("markdown") {
        let table = parse_markdown(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(table.rows.iter().all(|r| r.len() == table.columns.len()));
    }
}

#[test]
fn chat_response_seeds_round_trip() {
    for (_, text) in seeds("chat_response") {
        if let Ok(content) = parse_chat_response(&text) {
            assert_eq!(parse_chat_response(&response_body("m", &content)).unwrap(), content);
        }
    }
}

#[test]
fn transcript_line_seeds_round_trip() {
    for (path, text) in seeds("transcript_line") {
        let t = parse_line(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(to_line(&t), text);
    }
}

#[test]
fn config_toml_seeds_validate() {
    for (path, text) in seeds("config_toml") {
        let config: Config = toml::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        config.validate().unwrap();
    }
}
