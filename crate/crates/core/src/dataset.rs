//! Spider layout ingest: `tables.json`, a split file and `database/`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::hardness::{Hardness, HardnessProfile};
use crate::schema::{parse_tables_json, DatabaseSchema, SchemaError};
use crate::sql::{self, ParseErrorKind, SqlAst};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
}

impl Split {
    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train_spider.json",
            Split::Dev => "dev.json",
        }
    }
}

/// Raw split entry; unknown fields (`query_toks`, `sql`, ...) are ignored.
#[derive(Debug, Clone, Deserialize)]
pub struct RawExample {
    pub db_id: String,
    pub question: String,
    pub query: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiderExample {
    /// Index in the split file.
    pub id: usize,
    pub db_id: String,
    pub question: String,
    pub gold_sql: String,
    pub hardness: Hardness,
    pub profile: HardnessProfile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quarantined {
    pub id: usize,
    pub db_id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub split: Split,
    pub examples: Vec<SpiderExample>,
    pub quarantined: Vec<Quarantined>,
    pub schemas: BTreeMap<String, DatabaseSchema>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("malformed schema entry {}: {}: {}", .0.index, .0.db_id, .0.message)]
    Schema(#[from] SchemaError),
    #[error("duplicate schema for db_id {0}")]
    DuplicateSchema(String),
}

/// Per-bucket counts and membership.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct HardnessSummary {
    pub counts: BTreeMap<Hardness, usize>,
    pub members: BTreeMap<Hardness, Vec<usize>>,
}

impl Dataset {
    pub fn total(&self) -> usize {
        self.examples.len() + self.quarantined.len()
    }

    pub fn schema(&self, db_id: &str) -> Option<&DatabaseSchema> {
        self.schemas.get(db_id)
    }

    pub fn example(&self, id: usize) -> Option<&SpiderExample> {
        self.examples
            .binary_search_by_key(&id, |e| e.id)
            .ok()
            .map(|i| &self.examples[i])
    }

    pub fn hardness_summary(&self) -> HardnessSummary {
        let mut s = HardnessSummary::default();
        for h in Hardness::ALL {
            s.counts.insert(h, 0);
            s.members.insert(h, Vec::new());
        }
        for e in &self.examples {
            *s.counts.entry(e.hardness).or_default() += 1;
            s.members.entry(e.hardness).or_default().push(e.id);
        }
        s
    }

    /// Parses an example's gold query against its schema. Names that do not
    /// resolve are tolerated so that flawed gold can still be analysed.
    pub fn gold_ast(&self, e: &SpiderExample) -> Option<SqlAst> {
        let schema = self.schema(&e.db_id)?;
        sql::parse(&e.gold_sql, schema)
            .or_else(|_| sql::parse_lenient(&e.gold_sql, schema))
            .ok()
    }
}

fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_schemas(root: &Path) -> Result<BTreeMap<String, DatabaseSchema>, DatasetError> {
    let path = root.join("tables.json");
    let entries = parse_tables_json(&read(&path)?).map_err(|source| DatasetError::Json {
        path: path.clone(),
        source,
    })?;
    let database_dir = root.join("database");
    let mut schemas = BTreeMap::new();
    for (index, entry) in entries.iter().enumerate() {
        let schema = DatabaseSchema::from_spider_entry(index, entry, &database_dir)?;
        if schemas.insert(schema.db_id.clone(), schema).is_some() {
            return Err(DatasetError::DuplicateSchema(entry.db_id.clone()));
        }
    }
    Ok(schemas)
}

pub fn load_dataset(root: &Path, split: Split) -> Result<Dataset, DatasetError> {
    load_dataset_file(root, &root.join(split.file_name()), split)
}

/// Like [`load_dataset`] with an explicit split file.
pub fn load_dataset_file(root: &Path, split_file: &Path, split: Split) -> Result<Dataset, DatasetError> {
    let schemas = load_schemas(root)?;
    let raw: Vec<RawExample> =
        serde_json::from_str(&read(split_file)?).map_err(|source| DatasetError::Json {
            path: split_file.to_path_buf(),
            source,
        })?;
    let mut examples = Vec::new();
    let mut quarantined = Vec::new();
    for (id, r) in raw.into_iter().enumerate() {
        match admit(id, &r, &schemas) {
            Ok(e) => examples.push(e),
            Err(reason) => {
                log::warn!("quarantined example {id} ({}): {reason}", r.db_id);
                quarantined.push(Quarantined {
                    id,
                    db_id: r.db_id,
                    reason,
                });
            }
        }
    }
    Ok(Dataset {
        root: root.to_path_buf(),
        split,
        examples,
        quarantined,
        schemas,
    })
}

fn admit(
    id: usize,
    r: &RawExample,
    schemas: &BTreeMap<String, DatabaseSchema>,
) -> Result<SpiderExample, String> {
    let schema = schemas
        .get(&r.db_id)
        .ok_or_else(|| format!("unknown db_id {:?}", r.db_id))?;
    let ast = match sql::parse(&r.query, schema) {
        Ok(ast) => ast,
        Err(e) if matches!(e.kind, ParseErrorKind::UnknownColumn) => {
            log::warn!("gold query of example {id} does not bind: {e}");
            sql::parse_lenient(&r.query, schema).map_err(|e| format!("gold SQL: {e}"))?
        }
        Err(e) => return Err(format!("gold SQL: {e}")),
    };
    let profile = HardnessProfile::of(&ast);
    Ok(SpiderExample {
        id,
        db_id: r.db_id.clone(),
        question: r.question.clone(),
        gold_sql: r.query.clone(),
        hardness: profile.bucket(),
        profile,
    })
}
