//! Join-graph helpers: condition-less join detection and foreign-key repair.

use serde::Serialize;

use super::ast::*;
use crate::schema::DatabaseSchema;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionlessJoin {
    pub source: SourceId,
    /// Table name, or `None` for a derived table.
    pub table: Option<String>,
    /// Position of the source in its FROM list.
    pub position: usize,
    pub join: JoinKind,
}

/// Top-level AND conjuncts of `e`.
pub fn conjuncts(e: &Expr) -> Vec<&Expr> {
    match e {
        Expr::Binary {
            op: BinaryOp::And,
            left,
            right,
        } => {
            let mut v = conjuncts(left);
            v.extend(conjuncts(right));
            v
        }
        other => vec![other],
    }
}

/// Sources linked by a `col = col` conjunct.
fn equality_link(e: &Expr) -> Option<(SourceId, SourceId)> {
    let Expr::Binary {
        op: BinaryOp::Eq,
        left,
        right,
    } = e
    else {
        return None;
    };
    match (left.as_ref(), right.as_ref()) {
        (Expr::Column(a), Expr::Column(b)) => match (&a.binding, &b.binding) {
            (Binding::Source(x), Binding::Source(y)) if x != y => Some((*x, *y)),
            _ => None,
        },
        _ => None,
    }
}

/// Flags every join that has no ON condition and is not connected to an
/// earlier source through equality predicates (in WHERE or any join's ON,
/// possibly via later sources). Nested queries are inspected too.
pub fn detect_conditionless_join(ast: &SqlAst) -> Vec<ConditionlessJoin> {
    let mut flags = Vec::new();
    ast.visit_queries(&mut |q| flags.extend(flag_core(q)));
    flags
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn flag_core(q: &SqlAst) -> Vec<ConditionlessJoin> {
    if q.from.len() < 2 {
        return Vec::new();
    }
    let ids: Vec<SourceId> = q.from.iter().map(|s| s.id).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    let predicates = q
        .where_clause
        .iter()
        .chain(q.from.iter().filter_map(|s| s.condition.as_ref()));
    for p in predicates {
        for (a, b) in conjuncts(p).into_iter().filter_map(equality_link) {
            let pos = |id| ids.iter().position(|x| *x == id);
            if let (Some(a), Some(b)) = (pos(a), pos(b)) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut flags = Vec::new();
    for (position, s) in q.from.iter().enumerate().skip(1) {
        if s.condition.is_some() {
            continue;
        }
        let root = find(&mut parent, position);
        if (0..position).all(|j| find(&mut parent, j) != root) {
            flags.push(ConditionlessJoin {
                source: s.id,
                table: s.table_name().map(str::to_string),
                position,
                join: s.join,
            });
        }
    }
    flags
}

/// Adds a foreign-key join condition to every flagged join that has one
/// available. Returns `None` when nothing could be repaired.
pub fn repair_conditionless_joins(ast: &SqlAst, schema: &DatabaseSchema) -> Option<SqlAst> {
    let flags = detect_conditionless_join(ast);
    if flags.is_empty() {
        return None;
    }
    let mut out = ast.clone();
    let mut repaired = false;
    repair_query(&mut out, &flags, schema, &mut repaired);
    repaired.then_some(out)
}

fn repair_query(
    q: &mut SqlAst,
    flags: &[ConditionlessJoin],
    schema: &DatabaseSchema,
    repaired: &mut bool,
) {
    for i in 1..q.from.len() {
        if !flags.iter().any(|f| f.source == q.from[i].id) {
            continue;
        }
        let Some(table) = q.from[i].table_name().map(str::to_string) else {
            continue;
        };
        let found = q.from[..i].iter().find_map(|earlier| {
            let other = earlier.table_name()?;
            let fk = schema.foreign_keys_between(&table, other).into_iter().next()?;
            let (mine, theirs) = if fk.from.table.eq_ignore_ascii_case(&table) {
                (&fk.from.column, &fk.to.column)
            } else {
                (&fk.to.column, &fk.from.column)
            };
            Some(Expr::Binary {
                op: BinaryOp::Eq,
                left: Box::new(column(earlier, theirs)),
                right: Box::new(column(&q.from[i], mine)),
            })
        });
        if let Some(cond) = found {
            let s = &mut q.from[i];
            s.condition = Some(cond);
            if s.join != JoinKind::Left {
                s.join = JoinKind::Inner;
            }
            *repaired = true;
        }
    }
    for s in &mut q.from {
        if let Relation::Subquery(sub) = &mut s.relation {
            repair_query(sub, flags, schema, repaired);
        }
    }
    if let Some(op) = &mut q.set_op {
        repair_query(&mut op.right, flags, schema, repaired);
    }
}

fn column(source: &Source, name: &str) -> Expr {
    Expr::Column(ColumnRef {
        qualifier: source.exposed_name().map(str::to_string),
        name: name.to_string(),
        binding: Binding::Source(source.id),
    })
}
