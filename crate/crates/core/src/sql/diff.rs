//! Structural comparison of two canonical queries.
//!
//! Everything is compared through a rendering in which column references are
//! qualified by their table name instead of the positional `tN` alias, so
//! join order does not leak into unrelated clauses. A table that occurs more
//! than once in the statement gets an occurrence suffix (`cars_data#2`).

use std::collections::HashMap;

use serde::Serialize;

use super::ast::*;
use super::canonical::CanonicalAst;
use super::joins::{conjuncts, detect_conditionless_join};
use super::printer::{labelled_expr, labelled_query};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SelectDelta {
    /// Gold items absent from the prediction.
    pub missing: Vec<String>,
    /// Predicted items absent from gold.
    pub extra: Vec<String>,
    /// Same items, different order.
    pub reordered: bool,
    pub distinct_mismatch: bool,
}

impl SelectDelta {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty() && !self.reordered && !self.distinct_mismatch
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GroupByDelta {
    pub pred_only: Vec<String>,
    pub gold_only: Vec<String>,
}

impl GroupByDelta {
    pub fn is_empty(&self) -> bool {
        self.pred_only.is_empty() && self.gold_only.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateClause {
    Select,
    Where,
    Having,
    OrderBy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseAggregates {
    pub clause: AggregateClause,
    /// Sorted aggregate function names.
    pub pred: Vec<String>,
    pub gold: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AggregateDelta {
    pub clauses: Vec<ClauseAggregates>,
}

impl AggregateDelta {
    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn touches_output(&self) -> bool {
        self.clauses.iter().any(|c| c.clause == AggregateClause::Select)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JoinDelta {
    /// Tables joined by the prediction but not by gold.
    pub extra_tables: Vec<String>,
    pub missing_tables: Vec<String>,
    /// Join conditions (ON conjuncts) present on one side only.
    pub pred_only_conditions: Vec<String>,
    pub gold_only_conditions: Vec<String>,
    pub kind_mismatch: bool,
    pub conditionless_pred: Vec<String>,
    pub conditionless_gold: Vec<String>,
    /// Same tables, different FROM order. Not an error by itself.
    pub reordered: bool,
}

impl JoinDelta {
    /// True when nothing beyond a pure reordering differs.
    pub fn is_empty(&self) -> bool {
        self.extra_tables.is_empty()
            && self.missing_tables.is_empty()
            && self.pred_only_conditions.is_empty()
            && self.gold_only_conditions.is_empty()
            && !self.kind_mismatch
            && self.conditionless_pred == self.conditionless_gold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiteralMismatch {
    pub clause: String,
    pub pred: String,
    pub gold: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LiteralDelta {
    pub mismatches: Vec<LiteralMismatch>,
}

impl LiteralDelta {
    pub fn is_empty(&self) -> bool {
        self.mismatches.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StructureDelta {
    pub diverged: bool,
    pub subqueries: (usize, usize),
    pub set_ops: (Option<SetOperator>, Option<SetOperator>),
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseDifference {
    pub clause: String,
    pub pred: String,
    pub gold: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AstDiff {
    pub select_delta: SelectDelta,
    pub group_by_delta: GroupByDelta,
    pub aggregate_delta: AggregateDelta,
    pub join_delta: JoinDelta,
    pub literal_delta: LiteralDelta,
    pub structure_delta: StructureDelta,
    /// Differences not attributed to any of the fields above.
    pub clause_delta: Vec<ClauseDifference>,
}

impl AstDiff {
    pub fn is_empty(&self) -> bool {
        self.select_delta.is_empty()
            && self.group_by_delta.is_empty()
            && self.aggregate_delta.is_empty()
            && self.join_delta.is_empty()
            && !self.join_delta.reordered
            && self.literal_delta.is_empty()
            && !self.structure_delta.diverged
            && self.clause_delta.is_empty()
    }

    /// Every field except `literal_delta` is empty (a pure join reorder is
    /// tolerated).
    pub fn only_literals(&self) -> bool {
        self.select_delta.is_empty()
            && self.group_by_delta.is_empty()
            && self.aggregate_delta.is_empty()
            && self.join_delta.is_empty()
            && !self.structure_delta.diverged
            && self.clause_delta.is_empty()
    }
}

/// Table-name labels for every source in the statement.
pub fn source_labels(q: &SqlAst) -> HashMap<SourceId, String> {
    let mut sources: Vec<(SourceId, String)> = Vec::new();
    q.visit_queries(&mut |core| {
        for s in &core.from {
            let name = s
                .table_name()
                .map(str::to_lowercase)
                .unwrap_or_else(|| "derived".to_string());
            sources.push((s.id, name));
        }
    });
    sources.sort_by_key(|(id, _)| *id);
    let mut totals: HashMap<&str, usize> = HashMap::new();
    for (_, name) in &sources {
        *totals.entry(name.as_str()).or_default() += 1;
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut labels = HashMap::new();
    for (id, name) in &sources {
        let label = if totals[name.as_str()] > 1 {
            let k = seen.entry(name.clone()).or_default();
            *k += 1;
            format!("{name}#{k}")
        } else {
            name.clone()
        };
        labels.insert(*id, label);
    }
    labels
}

struct Side<'a> {
    q: &'a SqlAst,
    labels: HashMap<SourceId, String>,
}

impl Side<'_> {
    fn render(&self, e: &Expr) -> String {
        labelled_expr(e, &self.labels, false)
    }

    fn masked(&self, e: &Expr) -> String {
        labelled_expr(e, &self.labels, true)
    }
}

/// Elements of `a` not matched in `b`, multiset semantics.
fn multiset_minus(a: &[String], b: &[String]) -> Vec<String> {
    let mut pool: Vec<&String> = b.iter().collect();
    let mut out = Vec::new();
    for x in a {
        if let Some(i) = pool.iter().position(|y| *y == x) {
            pool.swap_remove(i);
        } else {
            out.push(x.clone());
        }
    }
    out
}

fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

pub fn diff(pred: &CanonicalAst, gold: &CanonicalAst) -> AstDiff {
    let p = Side {
        q: pred.ast(),
        labels: source_labels(pred.ast()),
    };
    let g = Side {
        q: gold.ast(),
        labels: source_labels(gold.ast()),
    };
    let mut d = AstDiff {
        select_delta: select_delta(&p, &g),
        group_by_delta: group_by_delta(&p, &g),
        aggregate_delta: aggregate_delta(&p, &g),
        join_delta: join_delta(&p, &g),
        literal_delta: LiteralDelta::default(),
        structure_delta: structure_delta(p.q, g.q),
        clause_delta: Vec::new(),
    };
    predicate_deltas(&p, &g, &mut d);
    remaining_clauses(&p, &g, &mut d);
    if d.is_empty() && pred != gold {
        d.clause_delta.push(ClauseDifference {
            clause: "other".to_string(),
            pred: pred.to_string(),
            gold: gold.to_string(),
        });
    }
    d
}

fn select_delta(p: &Side, g: &Side) -> SelectDelta {
    let items = |s: &Side| -> Vec<String> {
        s.q.select_items.iter().map(|i| s.render(&i.expr)).collect()
    };
    let (pi, gi) = (items(p), items(g));
    let missing = multiset_minus(&gi, &pi);
    let extra = multiset_minus(&pi, &gi);
    SelectDelta {
        reordered: missing.is_empty() && extra.is_empty() && pi != gi,
        missing,
        extra,
        distinct_mismatch: p.q.distinct != g.q.distinct,
    }
}

fn group_by_delta(p: &Side, g: &Side) -> GroupByDelta {
    let items = |s: &Side| -> Vec<String> { s.q.group_by.iter().map(|e| s.render(e)).collect() };
    let (pi, gi) = (items(p), items(g));
    GroupByDelta {
        pred_only: multiset_minus(&pi, &gi),
        gold_only: multiset_minus(&gi, &pi),
    }
}

fn aggregate_names<'a>(exprs: impl IntoIterator<Item = &'a Expr>) -> Vec<String> {
    let mut names = Vec::new();
    for e in exprs {
        e.walk(&mut |x| {
            if let Expr::Function { name, .. } = x {
                if is_aggregate_name(name) {
                    names.push(name.to_lowercase());
                }
            }
        });
    }
    sorted(names)
}

fn aggregate_delta(p: &Side, g: &Side) -> AggregateDelta {
    let per_clause = |q: &SqlAst, c: AggregateClause| match c {
        AggregateClause::Select => aggregate_names(q.select_items.iter().map(|i| &i.expr)),
        AggregateClause::Where => aggregate_names(q.where_clause.iter()),
        AggregateClause::Having => aggregate_names(q.having.iter()),
        AggregateClause::OrderBy => aggregate_names(q.order_by.iter().map(|o| &o.expr)),
    };
    let clauses = [
        AggregateClause::Select,
        AggregateClause::Where,
        AggregateClause::Having,
        AggregateClause::OrderBy,
    ]
    .into_iter()
    .filter_map(|c| {
        let (pa, ga) = (per_clause(p.q, c), per_clause(g.q, c));
        (pa != ga).then_some(ClauseAggregates {
            clause: c,
            pred: pa,
            gold: ga,
        })
    })
    .collect();
    AggregateDelta { clauses }
}

/// Join condition conjuncts with the operands of `=` put in a fixed order.
fn join_conditions(s: &Side) -> Vec<String> {
    let mut out = Vec::new();
    for src in &s.q.from {
        let Some(cond) = &src.condition else { continue };
        for c in conjuncts(cond) {
            match c {
                Expr::Binary {
                    op: BinaryOp::Eq,
                    left,
                    right,
                } => {
                    let mut sides = [s.render(left), s.render(right)];
                    sides.sort();
                    out.push(format!("{} = {}", sides[0], sides[1]));
                }
                other => out.push(s.render(other)),
            }
        }
    }
    out
}

fn join_delta(p: &Side, g: &Side) -> JoinDelta {
    let tables = |s: &Side| -> Vec<String> {
        s.q.from
            .iter()
            .map(|src| {
                src.table_name()
                    .map(str::to_lowercase)
                    .unwrap_or_else(|| "derived".to_string())
            })
            .collect()
    };
    let kinds = |s: &Side| -> Vec<&'static str> {
        let mut v: Vec<&'static str> = s
            .q
            .from
            .iter()
            .skip(1)
            .map(|src| match src.join {
                JoinKind::Left => "left",
                _ => "inner",
            })
            .collect();
        v.sort();
        v
    };
    let conditionless = |s: &Side| -> Vec<String> {
        let top: Vec<SourceId> = s.q.from.iter().map(|x| x.id).collect();
        sorted(
            detect_conditionless_join(s.q)
                .into_iter()
                .filter(|f| top.contains(&f.source))
                .map(|f| s.labels[&f.source].clone())
                .collect(),
        )
    };
    let (pt, gt) = (tables(p), tables(g));
    let (pc, gc) = (join_conditions(p), join_conditions(g));
    let extra_tables = multiset_minus(&pt, &gt);
    let missing_tables = multiset_minus(&gt, &pt);
    JoinDelta {
        reordered: extra_tables.is_empty() && missing_tables.is_empty() && pt != gt,
        extra_tables,
        missing_tables,
        pred_only_conditions: multiset_minus(&pc, &gc),
        gold_only_conditions: multiset_minus(&gc, &pc),
        kind_mismatch: kinds(p) != kinds(g),
        conditionless_pred: conditionless(p),
        conditionless_gold: conditionless(g),
    }
}

fn structure_delta(p: &SqlAst, g: &SqlAst) -> StructureDelta {
    let expr_subqueries = |q: &SqlAst| -> usize {
        let mut n = 0;
        q.visit_queries(&mut |core| {
            n += core
                .clause_exprs()
                .iter()
                .map(|e| e.subqueries().len())
                .sum::<usize>();
        });
        n
    };
    let derived = |q: &SqlAst| -> bool {
        let mut found = false;
        q.visit_queries(&mut |core| {
            found |= core
                .from
                .iter()
                .any(|s| matches!(s.relation, Relation::Subquery(_)));
        });
        found
    };
    let set_op = |q: &SqlAst| q.set_op.as_ref().map(|s| s.op);
    let mut d = StructureDelta {
        subqueries: (expr_subqueries(p), expr_subqueries(g)),
        set_ops: (set_op(p), set_op(g)),
        ..Default::default()
    };
    if d.subqueries.0 != d.subqueries.1 {
        d.reasons.push(format!(
            "subquery count differs: pred {} vs gold {}",
            d.subqueries.0, d.subqueries.1
        ));
    }
    if d.set_ops.0 != d.set_ops.1 {
        let show = |o: Option<SetOperator>| o.map_or("none", |o| o.keyword());
        d.reasons.push(format!(
            "set operation differs: pred {} vs gold {}",
            show(d.set_ops.0),
            show(d.set_ops.1)
        ));
    }
    if derived(p) != derived(g) {
        d.reasons.push(format!(
            "derived table: pred {} vs gold {}",
            derived(p),
            derived(g)
        ));
    }
    d.diverged = !d.reasons.is_empty();
    d
}

fn collect_literals_query(q: &SqlAst, out: &mut Vec<Literal>) {
    for i in &q.select_items {
        collect_literals(&i.expr, out);
    }
    for s in &q.from {
        if let Relation::Subquery(sub) = &s.relation {
            collect_literals_query(sub, out);
        }
        if let Some(c) = &s.condition {
            collect_literals(c, out);
        }
    }
    for e in q.where_clause.iter().chain(&q.group_by).chain(q.having.iter()) {
        collect_literals(e, out);
    }
    if let Some(op) = &q.set_op {
        collect_literals_query(&op.right, out);
    }
    for o in &q.order_by {
        collect_literals(&o.expr, out);
    }
}

/// Literals in printing order.
fn collect_literals(e: &Expr, out: &mut Vec<Literal>) {
    match e {
        Expr::Literal(l) => out.push(l.clone()),
        Expr::InSubquery { expr, subquery, .. } => {
            collect_literals(expr, out);
            collect_literals_query(subquery, out);
        }
        Expr::Exists { subquery, .. } => collect_literals_query(subquery, out),
        Expr::Subquery(q) => collect_literals_query(q, out),
        other => {
            for c in other.children() {
                collect_literals(c, out);
            }
        }
    }
}

fn show_literal(l: &Literal) -> String {
    match l {
        Literal::Number(n) => n.clone(),
        Literal::String(s) => super::printer::quote_string(s),
        Literal::DoubleQuoted(s) => format!("\"{s}\""),
        Literal::Null => "NULL".to_string(),
    }
}

/// WHERE and HAVING: literal mismatches when the shapes agree, a clause
/// difference otherwise.
fn predicate_deltas(p: &Side, g: &Side, d: &mut AstDiff) {
    let pairs = [
        ("where", p.q.where_clause.as_ref(), g.q.where_clause.as_ref()),
        ("having", p.q.having.as_ref(), g.q.having.as_ref()),
    ];
    for (clause, pe, ge) in pairs {
        let shape_p = pe.map(|e| p.masked(e));
        let shape_g = ge.map(|e| g.masked(e));
        if shape_p != shape_g {
            d.clause_delta.push(ClauseDifference {
                clause: clause.to_string(),
                pred: pe.map(|e| p.render(e)).unwrap_or_default(),
                gold: ge.map(|e| g.render(e)).unwrap_or_default(),
            });
            continue;
        }
        let (Some(pe), Some(ge)) = (pe, ge) else { continue };
        let (mut pl, mut gl) = (Vec::new(), Vec::new());
        collect_literals(pe, &mut pl);
        collect_literals(ge, &mut gl);
        for (a, b) in pl.iter().zip(&gl) {
            if a != b {
                d.literal_delta.mismatches.push(LiteralMismatch {
                    clause: clause.to_string(),
                    pred: show_literal(a),
                    gold: show_literal(b),
                });
            }
        }
    }
}

fn remaining_clauses(p: &Side, g: &Side, d: &mut AstDiff) {
    let mut push = |clause: &str, a: String, b: String| {
        if a != b {
            d.clause_delta.push(ClauseDifference {
                clause: clause.to_string(),
                pred: a,
                gold: b,
            });
        }
    };
    let order = |s: &Side| -> String {
        s.q.order_by
            .iter()
            .map(|o| {
                let dir = if o.direction == Direction::Desc { " DESC" } else { "" };
                format!("{}{dir}", s.render(&o.expr))
            })
            .collect::<Vec<_>>()
            .join(", ")
    };
    push("order_by", order(p), order(g));
    let num = |v: Option<u64>| v.map(|n| n.to_string()).unwrap_or_default();
    push("limit", num(p.q.limit), num(g.q.limit));
    push("offset", num(p.q.offset), num(g.q.offset));
    let derived = |s: &Side| -> Vec<String> {
        s.q.from
            .iter()
            .filter_map(|src| match &src.relation {
                Relation::Subquery(sub) => Some(labelled_query(sub, &s.labels, false)),
                Relation::Table { .. } => None,
            })
            .collect()
    };
    push("from", derived(p).join("; "), derived(g).join("; "));
    let right = |s: &Side| {
        s.q.set_op
            .as_ref()
            .map(|op| labelled_query(&op.right, &s.labels, false))
            .unwrap_or_default()
    };
    if p.q.set_op.as_ref().map(|o| o.op) == g.q.set_op.as_ref().map(|o| o.op) {
        push("set_op", right(p), right(g));
    }
}
