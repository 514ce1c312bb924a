//! Classification of failed predictions into seven error categories.
//!
//! Rules are checked in a fixed order and the first one that fires wins:
//! dataset inconsistency (alias-only difference, equivalent results, rank
//! tie, flawed gold), query structure, joins, grouping, aggregates, select
//! list, and finally predicate values.

pub mod report;
pub mod tie;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::exec::{execute_at, tables_equivalent, ExecLimits, ExecOutcome, HarnessFault, ResultTable};
use crate::schema::DatabaseSchema;
use crate::sql::joins::{detect_conditionless_join, repair_conditionless_joins, ConditionlessJoin};
use crate::sql::{canonicalize, diff, to_sql, AstDiff, SqlAst};

pub use report::{sample_for_audit, triage_report, TriageDistribution};
pub use tie::{tie_ambiguity_test, TieTest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    SelectColumns,
    GroupBy,
    PredictedValues,
    AggregateChoice,
    JoinClauses,
    DatasetInconsistency,
    QueryStructure,
    /// No rule fired.
    Unclassifiable,
}

impl Category {
    pub const SEVEN: [Category; 7] = [
        Category::SelectColumns,
        Category::GroupBy,
        Category::PredictedValues,
        Category::AggregateChoice,
        Category::JoinClauses,
        Category::DatasetInconsistency,
        Category::QueryStructure,
    ];
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subtag {
    WrongColumn,
    WrongOrder,
    Distinct,
    Missing,
    Extra,
    WrongValue,
    InOutput,
    HiddenFromOutput,
    WrongTable,
    WrongCondition,
    AliasOnlyEquivalent,
    ResultEquivalent,
    TieAmbiguity,
    SuspectGold,
    SubqueryVsJoin,
    SetOperation,
    Other,
    Unparseable,
    NoRule,
}

impl fmt::Display for Subtag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Confidence {
    Definite,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuspectGold {
    pub flagged_joins: Vec<ConditionlessJoin>,
    pub gold_rows: usize,
    pub repaired_rows: usize,
    pub repaired_sql: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriageVerdict {
    pub category: Category,
    pub subtag: Subtag,
    pub confidence: Confidence,
    /// Human-readable facts backing the verdict; never empty.
    pub evidence: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diff: Option<AstDiff>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tie: Option<TieTest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suspect_gold: Option<SuspectGold>,
}

impl TriageVerdict {
    pub fn label(&self) -> String {
        format!("{}.{}", self.category, self.subtag)
    }

    fn new(category: Category, subtag: Subtag, confidence: Confidence, evidence: Vec<String>) -> Self {
        debug_assert!(!evidence.is_empty());
        TriageVerdict {
            category,
            subtag,
            confidence,
            evidence,
            diff: None,
            tie: None,
            suspect_gold: None,
        }
    }
}

pub struct TriageInput<'a> {
    /// `None` when the prediction does not parse.
    pub pred_ast: Option<&'a SqlAst>,
    pub pred_sql: &'a str,
    pub gold_ast: &'a SqlAst,
    pub pred_outcome: &'a ExecOutcome,
    pub gold_table: &'a ResultTable,
    pub schema: &'a DatabaseSchema,
    pub limits: ExecLimits,
}

/// Flags gold queries whose condition-less join inflates the result: the
/// gold returns at least twice as many rows as the same query with
/// foreign-key join conditions added (or the repaired query returns none).
pub fn suspect_gold_check(
    gold: &SqlAst,
    gold_table: &ResultTable,
    schema: &DatabaseSchema,
    limits: ExecLimits,
) -> Result<Option<SuspectGold>, HarnessFault> {
    let flagged_joins = detect_conditionless_join(gold);
    if flagged_joins.is_empty() {
        return Ok(None);
    }
    let Some(repaired) = repair_conditionless_joins(gold, schema) else {
        return Ok(None);
    };
    let repaired_sql = to_sql(&repaired);
    let repaired_rows = match execute_at(&schema.db_path, &repaired_sql, limits)? {
        ExecOutcome::Table(t) if !t.truncated => t.rows.len(),
        _ => return Ok(None),
    };
    let gold_rows = gold_table.rows.len();
    let inflated = gold_rows > 0 && (repaired_rows == 0 || gold_rows >= 2 * repaired_rows);
    Ok(inflated.then_some(SuspectGold {
        flagged_joins,
        gold_rows,
        repaired_rows,
        repaired_sql,
    }))
}

pub fn triage(input: &TriageInput<'_>) -> Result<TriageVerdict, HarnessFault> {
    use Category::*;
    use Confidence::*;

    let Some(pred_ast) = input.pred_ast else {
        let mut v = TriageVerdict::new(
            Unclassifiable,
            Subtag::Unparseable,
            Definite,
            vec![format!("prediction is outside the parsed dialect: {}", input.pred_sql.trim())],
        );
        if let Some(msg) = input.pred_outcome.error_message() {
            v.evidence.push(format!("execution error: {msg}"));
        }
        return Ok(v);
    };
    let pred_c = canonicalize(pred_ast);
    let gold_c = canonicalize(input.gold_ast);
    if pred_c == gold_c {
        return Ok(TriageVerdict::new(
            DatasetInconsistency,
            Subtag::AliasOnlyEquivalent,
            Definite,
            vec![format!("canonical forms are identical: {gold_c}")],
        ));
    }
    let pred_table = input.pred_outcome.table();
    if let Some(t) = pred_table {
        if tables_equivalent(t, input.gold_table) {
            return Ok(TriageVerdict::new(
                DatasetInconsistency,
                Subtag::ResultEquivalent,
                Definite,
                vec![format!(
                    "result tables are equivalent ({} rows, {} columns)",
                    t.rows.len(),
                    t.columns.len()
                )],
            ));
        }
    }
    let tie = tie_ambiguity_test(
        pred_ast,
        pred_table,
        input.gold_ast,
        input.gold_table,
        input.schema,
        input.limits,
    )?;
    let d = diff(&pred_c, &gold_c);
    if let TieTest::Evaluated {
        tie: true,
        k,
        tied_count,
        ..
    } = &tie
    {
        let mut v = TriageVerdict::new(
            DatasetInconsistency,
            Subtag::TieAmbiguity,
            Heuristic,
            vec![format!(
                "{tied_count} rows share the ordering key at rank {k}; the prediction returns one of the tied rows"
            )],
        );
        v.tie = Some(tie);
        v.diff = Some(d);
        return Ok(v);
    }
    if let Some(s) = suspect_gold_check(input.gold_ast, input.gold_table, input.schema, input.limits)? {
        let mut v = TriageVerdict::new(
            DatasetInconsistency,
            Subtag::SuspectGold,
            Heuristic,
            vec![format!(
                "gold joins without a condition and returns {} rows; with foreign-key join conditions it returns {}",
                s.gold_rows, s.repaired_rows
            )],
        );
        v.suspect_gold = Some(s);
        v.diff = Some(d);
        return Ok(v);
    }
    let mut v = classify_diff(&d);
    if let Some(msg) = input.pred_outcome.error_message() {
        v.evidence.push(format!("execution error: {msg}"));
    }
    if let (Some(p), ExecOutcome::Table(_)) = (pred_table, input.pred_outcome) {
        v.evidence.push(format!(
            "pred returns {} rows, gold {}",
            p.rows.len(),
            input.gold_table.rows.len()
        ));
    }
    v.diff = Some(d);
    Ok(v)
}

/// Maps a structural diff to a verdict, ignoring data-dependent rules.
pub fn classify_diff(d: &AstDiff) -> TriageVerdict {
    use Category::*;
    use Confidence::*;

    let s = &d.structure_delta;
    if s.diverged {
        let subtag = if s.set_ops.0 != s.set_ops.1 {
            Subtag::SetOperation
        } else if s.subqueries.0 != s.subqueries.1 {
            Subtag::SubqueryVsJoin
        } else {
            Subtag::Other
        };
        return TriageVerdict::new(QueryStructure, subtag, Definite, s.reasons.clone());
    }
    let j = &d.join_delta;
    if !j.is_empty() {
        let mut ev = Vec::new();
        if !j.extra_tables.is_empty() {
            ev.push(format!("pred joins extra tables: {}", j.extra_tables.join(", ")));
        }
        if !j.missing_tables.is_empty() {
            ev.push(format!("pred omits tables: {}", j.missing_tables.join(", ")));
        }
        let subtag = match (j.extra_tables.is_empty(), j.missing_tables.is_empty()) {
            (false, true) => Subtag::Extra,
            (true, false) => Subtag::Missing,
            (false, false) => Subtag::WrongTable,
            (true, true) => {
                if !j.pred_only_conditions.is_empty() || !j.gold_only_conditions.is_empty() {
                    ev.push(format!(
                        "join conditions differ: pred [{}] vs gold [{}]",
                        j.pred_only_conditions.join(", "),
                        j.gold_only_conditions.join(", ")
                    ));
                }
                if j.kind_mismatch {
                    ev.push("join kinds differ".to_string());
                }
                if j.conditionless_pred != j.conditionless_gold {
                    ev.push(format!(
                        "condition-less joins: pred [{}] vs gold [{}]",
                        j.conditionless_pred.join(", "),
                        j.conditionless_gold.join(", ")
                    ));
                }
                Subtag::WrongCondition
            }
        };
        return TriageVerdict::new(JoinClauses, subtag, Definite, ev);
    }
    let g = &d.group_by_delta;
    if !g.is_empty() {
        let subtag = match (g.pred_only.is_empty(), g.gold_only.is_empty()) {
            (false, false) => Subtag::WrongColumn,
            (true, false) => Subtag::Missing,
            _ => Subtag::Extra,
        };
        return TriageVerdict::new(
            GroupBy,
            subtag,
            Definite,
            vec![format!(
                "GROUP BY differs: pred [{}] vs gold [{}]",
                g.pred_only.join(", "),
                g.gold_only.join(", ")
            )],
        );
    }
    let a = &d.aggregate_delta;
    if !a.is_empty() {
        let subtag = if a.touches_output() {
            Subtag::InOutput
        } else {
            Subtag::HiddenFromOutput
        };
        let ev = a
            .clauses
            .iter()
            .map(|c| {
                format!(
                    "{:?} aggregates differ: pred [{}] vs gold [{}]",
                    c.clause,
                    c.pred.join(", "),
                    c.gold.join(", ")
                )
            })
            .collect();
        return TriageVerdict::new(AggregateChoice, subtag, Definite, ev);
    }
    let sel = &d.select_delta;
    if !sel.is_empty() {
        let (subtag, ev) = if !sel.missing.is_empty() || !sel.extra.is_empty() {
            (
                Subtag::WrongColumn,
                format!(
                    "select list differs: pred has [{}], gold has [{}]",
                    sel.extra.join(", "),
                    sel.missing.join(", ")
                ),
            )
        } else if sel.reordered {
            (Subtag::WrongOrder, "same columns selected in a different order".to_string())
        } else {
            (Subtag::Distinct, "DISTINCT differs".to_string())
        };
        return TriageVerdict::new(SelectColumns, subtag, Definite, vec![ev]);
    }
    if !d.literal_delta.is_empty() && d.only_literals() {
        let ev = d
            .literal_delta
            .mismatches
            .iter()
            .map(|m| format!("{} literal differs: pred {} vs gold {}", m.clause, m.pred, m.gold))
            .collect();
        return TriageVerdict::new(PredictedValues, Subtag::WrongValue, Definite, ev);
    }
    let mut ev: Vec<String> = d
        .clause_delta
        .iter()
        .map(|c| format!("{} differs: pred `{}` vs gold `{}`", c.clause, c.pred, c.gold))
        .collect();
    if !d.literal_delta.is_empty() {
        ev.push("literal differences alongside other changes".to_string());
    }
    if ev.is_empty() {
        ev.push("no structural difference found".to_string());
    }
    TriageVerdict::new(Unclassifiable, Subtag::NoRule, Definite, ev)
}
