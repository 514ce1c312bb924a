//! Rank-boundary tie detection for `ORDER BY ... LIMIT k` queries.

use serde::{Deserialize, Serialize};

use crate::exec::equivalence::cells_equal;
use crate::exec::{execute_at, Cell, ExecLimits, ExecOutcome, HarnessFault, ResultTable};
use crate::schema::DatabaseSchema;
use crate::sql::ast::*;
use crate::sql::to_sql;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum TieTest {
    NotApplicable {
        reason: String,
    },
    Evaluated {
        tie: bool,
        k: u64,
        /// Rows of the full gold result sharing the rank-k ordering key.
        tied_count: usize,
        boundary_key: Vec<Cell>,
    },
}

impl TieTest {
    pub fn passed(&self) -> bool {
        matches!(self, TieTest::Evaluated { tie: true, .. })
    }

    fn na(reason: &str) -> Self {
        TieTest::NotApplicable {
            reason: reason.to_string(),
        }
    }
}

const TOLERANCE: f64 = 1e-6;

/// The gold query without LIMIT and with its ORDER BY keys appended to the
/// select list. Alias and positional keys are resolved to the select item.
pub fn unlimited_with_keys(gold: &SqlAst) -> Option<(SqlAst, usize, usize)> {
    let mut q = gold.clone();
    q.limit = None;
    q.offset = None;
    let width = q.select_items.len();
    let mut keys = Vec::new();
    for o in &q.order_by {
        let expr = match &o.expr {
            Expr::Column(ColumnRef {
                binding: Binding::OutputAlias(i),
                ..
            }) => q.select_items.get(*i)?.expr.clone(),
            Expr::Literal(Literal::Number(n)) => {
                let pos: usize = n.parse().ok()?;
                q.select_items.get(pos.checked_sub(1)?)?.expr.clone()
            }
            other => other.clone(),
        };
        keys.push(SelectItem { expr, alias: None });
    }
    let n_keys = keys.len();
    q.select_items.extend(keys);
    Some((q, width, n_keys))
}

fn row_matches(a: &[Cell], b: &[Cell]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| cells_equal(x, y, TOLERANCE))
}

/// True when the predicted rows are one valid answer under the tie: every
/// gold row ranked strictly above the tied group, plus the rest drawn from
/// the tied group, and the prediction differs from the gold top-k.
pub fn tie_ambiguity_test(
    pred: &SqlAst,
    pred_table: Option<&ResultTable>,
    gold: &SqlAst,
    gold_table: &ResultTable,
    schema: &DatabaseSchema,
    limits: ExecLimits,
) -> Result<TieTest, HarnessFault> {
    if pred.set_op.is_some() || gold.set_op.is_some() {
        return Ok(TieTest::na("compound query"));
    }
    if pred.order_by.is_empty() || pred.limit.is_none() {
        return Ok(TieTest::na("prediction lacks ORDER BY ... LIMIT"));
    }
    let Some(k) = gold.limit.filter(|_| !gold.order_by.is_empty()) else {
        return Ok(TieTest::na("gold lacks ORDER BY ... LIMIT"));
    };
    if gold.offset.is_some() || k == 0 {
        return Ok(TieTest::na("gold uses OFFSET or LIMIT 0"));
    }
    let Some(pred_table) = pred_table else {
        return Ok(TieTest::na("prediction produced no table"));
    };
    let Some((full, width, n_keys)) = unlimited_with_keys(gold) else {
        return Ok(TieTest::na("ORDER BY key cannot be resolved"));
    };
    let full_table = match execute_at(&schema.db_path, &to_sql(&full), limits)? {
        ExecOutcome::Table(t) if !t.truncated => t,
        _ => return Ok(TieTest::na("full gold query did not run to completion")),
    };
    let k_idx = k as usize - 1;
    if full_table.rows.len() <= k_idx {
        return Ok(TieTest::na("gold returns fewer than k rows"));
    }
    let key = |row: &Vec<Cell>| row[width..width + n_keys].to_vec();
    let boundary = key(&full_table.rows[k_idx]);
    let same = |row: &Vec<Cell>| row_matches(&key(row), &boundary);
    let start = (0..=k_idx)
        .rev()
        .take_while(|&i| same(&full_table.rows[i]))
        .last()
        .unwrap_or(k_idx);
    let end = (k_idx..full_table.rows.len())
        .take_while(|&i| same(&full_table.rows[i]))
        .last()
        .unwrap_or(k_idx)
        + 1;
    let tied_count = end - start;
    let project = |row: &Vec<Cell>| row[..width].to_vec();

    let mut tie = tied_count > 1 && end > k as usize && pred_table.columns.len() == width;
    if tie {
        let mut pool: Vec<Vec<Cell>> = pred_table.rows.clone();
        // Rows ranked above the tied group must all be present.
        for row in &full_table.rows[..start] {
            match pool.iter().position(|p| row_matches(p, &project(row))) {
                Some(i) => {
                    pool.swap_remove(i);
                }
                None => tie = false,
            }
        }
        let mut group: Vec<Vec<Cell>> = full_table.rows[start..end].iter().map(project).collect();
        for p in &pool {
            match group.iter().position(|g| row_matches(p, g)) {
                Some(i) => {
                    group.swap_remove(i);
                }
                None => tie = false,
            }
        }
        tie &= pred_table.rows.len() == gold_table.rows.len()
            && !crate::exec::tables_equivalent(pred_table, gold_table);
    }
    Ok(TieTest::Evaluated {
        tie,
        k,
        tied_count,
        boundary_key: boundary,
    })
}
