//! Triage of failed transcripts.

use serde::Serialize;

use spidereval_core::dataset::{Dataset, SpiderExample};
use spidereval_core::exec::{execute_for_comparison, ExecLimits, ExecOutcome, HarnessFault};
use spidereval_core::hardness::Hardness;
use spidereval_core::sql::parse_lenient;
use spidereval_core::triage::{triage, Category, Confidence, Subtag, TriageInput, TriageVerdict};
use spidereval_pipeline::PipelineTranscript;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriageRecord {
    pub example_id: usize,
    pub db_id: String,
    pub hardness: Hardness,
    pub label: String,
    pub pred_sql: Option<String>,
    pub gold_sql: String,
    pub verdict: TriageVerdict,
}

fn unclassifiable(subtag: Subtag, evidence: String) -> TriageVerdict {
    TriageVerdict {
        category: Category::Unclassifiable,
        subtag,
        confidence: Confidence::Definite,
        evidence: vec![evidence],
        diff: None,
        tie: None,
        suspect_gold: None,
    }
}

/// Triages one prediction against its gold query.
pub fn triage_example(
    dataset: &Dataset,
    example: &SpiderExample,
    pred_sql: &str,
    limits: ExecLimits,
) -> Result<TriageVerdict, HarnessFault> {
    let Some(schema) = dataset.schema(&example.db_id) else {
        return Ok(unclassifiable(Subtag::NoRule, format!("unknown database {}", example.db_id)));
    };
    let Some(gold_ast) = dataset.gold_ast(example) else {
        return Ok(unclassifiable(Subtag::Unparseable, "gold query does not parse".into()));
    };
    let gold_table = match execute_for_comparison(&schema.db_path, &example.gold_sql, limits)? {
        ExecOutcome::Table(t) => t,
        other => {
            let why = other.error_message().unwrap_or("timed out").to_string();
            return Ok(unclassifiable(Subtag::NoRule, format!("gold query does not execute: {why}")));
        }
    };
    let pred_ast = parse_lenient(pred_sql, schema).ok();
    let pred_outcome = execute_for_comparison(&schema.db_path, pred_sql, limits)?;
    triage(&TriageInput {
        pred_ast: pred_ast.as_ref(),
        pred_sql,
        gold_ast: &gold_ast,
        pred_outcome: &pred_outcome,
        gold_table: &gold_table,
        schema,
        limits,
    })
}

/// Triages each transcript's final query. Faulted transcripts are
/// skipped since there is no model output to analyse.
pub fn triage_transcripts(
    dataset: &Dataset,
    transcripts: &[&PipelineTranscript],
    limits: ExecLimits,
) -> Result<Vec<TriageRecord>, HarnessFault> {
    let mut out = Vec::new();
    for t in transcripts {
        if t.fault.is_some() {
            continue;
        }
        let Some(example) = dataset.example(t.example_id) else { continue };
        let verdict = triage_example(dataset, example, t.final_sql.as_deref().unwrap_or(""), limits)?;
        out.push(TriageRecord {
            example_id: t.example_id,
            db_id: t.db_id.clone(),
            hardness: example.hardness,
            label: verdict.label(),
            pred_sql: t.final_sql.clone(),
            gold_sql: example.gold_sql.clone(),
            verdict,
        });
    }
    Ok(out)
}
