//! Spider's four-bucket difficulty rule.
//!
//! The counts follow the reference evaluation script, quirks included: a
//! negated WHERE condition counts as an aggregate, and so does every
//! condition connector in HAVING. Only the top-level query is inspected.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sql::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hardness {
    Easy,
    Medium,
    Hard,
    Extra,
}

impl Hardness {
    pub const ALL: [Hardness; 4] = [Hardness::Easy, Hardness::Medium, Hardness::Hard, Hardness::Extra];

    pub fn as_str(self) -> &'static str {
        match self {
            Hardness::Easy => "easy",
            Hardness::Medium => "medium",
            Hardness::Hard => "hard",
            Hardness::Extra => "extra",
        }
    }
}

impl fmt::Display for Hardness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Hardness {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Hardness::ALL
            .into_iter()
            .find(|h| h.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown hardness {s:?}"))
    }
}

/// Component counts behind a [`Hardness`] verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardnessProfile {
    pub comp1: usize,
    pub comp2: usize,
    pub others: usize,
}

impl HardnessProfile {
    pub fn of(q: &SqlAst) -> Self {
        let where_units = q.where_clause.as_ref().map(condition_units).unwrap_or_default();
        let having_units = q.having.as_ref().map(condition_units).unwrap_or_default();
        HardnessProfile {
            comp1: component1(q, &where_units, &having_units),
            comp2: component2(q, &where_units, &having_units),
            others: others(q, &where_units, &having_units),
        }
    }

    pub fn bucket(self) -> Hardness {
        let HardnessProfile {
            comp1,
            comp2,
            others,
        } = self;
        if comp1 <= 1 && others == 0 && comp2 == 0 {
            Hardness::Easy
        } else if (others <= 2 && comp1 <= 1 && comp2 == 0) || (comp1 <= 2 && others < 2 && comp2 == 0) {
            Hardness::Medium
        } else if (others > 2 && comp1 <= 2 && comp2 == 0)
            || (2 < comp1 && comp1 <= 3 && others <= 2 && comp2 == 0)
            || (comp1 <= 1 && others == 0 && comp2 <= 1)
        {
            Hardness::Hard
        } else {
            Hardness::Extra
        }
    }
}

pub fn classify_hardness(q: &SqlAst) -> Hardness {
    HardnessProfile::of(q).bucket()
}

/// A condition flattened into its AND/OR-separated units.
#[derive(Default)]
struct Units<'a> {
    leaves: Vec<&'a Expr>,
    ors: usize,
    connectors: usize,
}

fn condition_units(e: &Expr) -> Units<'_> {
    fn go<'a>(e: &'a Expr, u: &mut Units<'a>) {
        match e {
            Expr::Binary {
                op: op @ (BinaryOp::And | BinaryOp::Or),
                left,
                right,
            } => {
                u.connectors += 1;
                if *op == BinaryOp::Or {
                    u.ors += 1;
                }
                go(left, u);
                go(right, u);
            }
            other => u.leaves.push(other),
        }
    }
    let mut u = Units::default();
    go(e, &mut u);
    u
}

fn negated(unit: &Expr) -> bool {
    matches!(
        unit,
        Expr::Unary { op: UnaryOp::Not, .. }
            | Expr::InList { negated: true, .. }
            | Expr::InSubquery { negated: true, .. }
            | Expr::Between { negated: true, .. }
            | Expr::Pattern { negated: true, .. }
            | Expr::Exists { negated: true, .. }
    )
}

fn is_like(unit: &Expr) -> bool {
    matches!(unit, Expr::Pattern { op: PatternOp::Like, .. })
}

fn component1(q: &SqlAst, w: &Units, h: &Units) -> usize {
    let mut n = 0;
    n += usize::from(q.where_clause.is_some());
    n += usize::from(!q.group_by.is_empty());
    n += usize::from(!q.order_by.is_empty());
    n += usize::from(q.limit.is_some());
    n += q.from.len().saturating_sub(1);
    n += w.ors + h.ors;
    n += w.leaves.iter().chain(&h.leaves).filter(|u| is_like(u)).count();
    n
}

fn component2(q: &SqlAst, w: &Units, h: &Units) -> usize {
    let on_units: Vec<Units> = q
        .from
        .iter()
        .filter_map(|s| s.condition.as_ref())
        .map(condition_units)
        .collect();
    let mut n: usize = on_units
        .iter()
        .flat_map(|u| u.leaves.iter())
        .chain(&w.leaves)
        .chain(&h.leaves)
        .map(|leaf| leaf.subqueries().len())
        .sum();
    n += usize::from(q.set_op.is_some());
    n
}

/// Leftmost leaf of an arithmetic chain.
fn leftmost(e: &Expr) -> &Expr {
    match e {
        Expr::Binary { op, left, .. } if op.is_arithmetic() => leftmost(left),
        other => other,
    }
}

fn others(q: &SqlAst, w: &Units, h: &Units) -> usize {
    let mut agg = 0;
    agg += q
        .select_items
        .iter()
        .filter(|i| leftmost(&i.expr).is_aggregate_call())
        .count();
    agg += w.leaves.iter().filter(|u| negated(u)).count();
    agg += q.group_by.iter().filter(|g| g.is_aggregate_call()).count();
    for o in &q.order_by {
        agg += match &o.expr {
            Expr::Binary {
                op, left, right, ..
            } if op.is_arithmetic() => {
                usize::from(left.is_aggregate_call()) + usize::from(right.is_aggregate_call())
            }
            e => usize::from(e.is_aggregate_call()),
        };
    }
    agg += h.leaves.iter().filter(|u| negated(u)).count() + h.connectors;

    let mut n = 0;
    n += usize::from(agg > 1);
    n += usize::from(q.select_items.len() > 1);
    n += usize::from(w.leaves.len() > 1);
    n += usize::from(q.group_by.len() > 1);
    n
}
