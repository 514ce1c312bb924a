//! Core of the text-to-SQL evaluation harness: dataset ingest, SQL analysis,
//! sandboxed execution and error triage.

pub mod schema;
pub mod sql;
pub mod hardness;
pub mod exec;
pub mod corpus;
pub mod dataset;
pub mod prompt;
pub mod triage;
