//! Alias- and case-normalised form of a bound query.
//!
//! Sources are renamed `t1, t2, ...` in pre-order (outer FROM list first,
//! then derived-table bodies, expression subqueries and the compound
//! right-hand side), identifiers are lower-cased, output-alias references are
//! replaced by the expression they name, and select-list aliases are dropped.
//! Literals are left untouched.

use std::collections::HashMap;

use super::ast::*;

/// A [`SqlAst`] in canonical form. Construct with [`canonicalize`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(transparent)]
pub struct CanonicalAst(SqlAst);

impl CanonicalAst {
    pub fn ast(&self) -> &SqlAst {
        &self.0
    }

    pub fn into_inner(self) -> SqlAst {
        self.0
    }
}

impl std::ops::Deref for CanonicalAst {
    type Target = SqlAst;
    fn deref(&self) -> &SqlAst {
        &self.0
    }
}

impl std::fmt::Display for CanonicalAst {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

pub fn canonicalize(ast: &SqlAst) -> CanonicalAst {
    let mut numbering = HashMap::new();
    number_sources(ast, &mut numbering);
    let mut out = ast.clone();
    rewrite_query(&mut out, &numbering);
    CanonicalAst(out)
}

fn number_sources(q: &SqlAst, map: &mut HashMap<SourceId, u32>) {
    for s in &q.from {
        let next = map.len() as u32 + 1;
        map.entry(s.id).or_insert(next);
    }
    for s in &q.from {
        if let Relation::Subquery(sub) = &s.relation {
            number_sources(sub, map);
        }
    }
    for e in q.clause_exprs() {
        for sub in e.subqueries() {
            number_sources(sub, map);
        }
    }
    if let Some(op) = &q.set_op {
        number_sources(&op.right, map);
    }
}

fn label(n: u32) -> String {
    format!("t{n}")
}

fn rewrite_query(q: &mut SqlAst, map: &HashMap<SourceId, u32>) {
    for s in &mut q.from {
        let n = map[&s.id];
        s.id = SourceId(n);
        s.alias = Some(label(n));
        match &mut s.relation {
            Relation::Table { name, .. } => *name = name.to_lowercase(),
            Relation::Subquery(sub) => rewrite_query(sub, map),
        }
        if let Some(c) = &mut s.condition {
            rewrite_expr(c, map);
        }
    }
    for item in &mut q.select_items {
        rewrite_expr(&mut item.expr, map);
    }
    let outputs: Vec<Expr> = q.select_items.iter().map(|i| i.expr.clone()).collect();
    let clause = |e: &mut Expr| {
        rewrite_expr(e, map);
        substitute_aliases(e, &outputs);
    };
    if let Some(w) = &mut q.where_clause {
        clause(w);
    }
    for g in &mut q.group_by {
        clause(g);
    }
    if let Some(h) = &mut q.having {
        clause(h);
    }
    for o in &mut q.order_by {
        clause(&mut o.expr);
    }
    for item in &mut q.select_items {
        item.alias = None;
    }
    if let Some(op) = &mut q.set_op {
        rewrite_query(&mut op.right, map);
    }
}

fn rewrite_column(c: &mut ColumnRef, map: &HashMap<SourceId, u32>) {
    c.name = c.name.to_lowercase();
    match c.binding {
        Binding::Source(id) => {
            let n = map.get(&id).copied().unwrap_or(id.0);
            c.binding = Binding::Source(SourceId(n));
            c.qualifier = Some(label(n));
        }
        _ => c.qualifier = c.qualifier.as_ref().map(|q| q.to_lowercase()),
    }
}

fn rewrite_expr(e: &mut Expr, map: &HashMap<SourceId, u32>) {
    match e {
        Expr::Column(c) => rewrite_column(c, map),
        Expr::Star { qualifier, source } => {
            if let Some(id) = source {
                let n = map.get(id).copied().unwrap_or(id.0);
                *source = Some(SourceId(n));
                *qualifier = Some(label(n));
            } else {
                *qualifier = qualifier.as_ref().map(|q| q.to_lowercase());
            }
        }
        Expr::Function { name, .. } => *name = name.to_lowercase(),
        Expr::Cast { type_name, .. } => *type_name = type_name.to_lowercase(),
        Expr::Collate { collation, .. } => *collation = collation.to_lowercase(),
        _ => {}
    }
    match e {
        Expr::InSubquery { expr, subquery, .. } => {
            rewrite_expr(expr, map);
            rewrite_query(subquery, map);
        }
        Expr::Exists { subquery, .. } => rewrite_query(subquery, map),
        Expr::Subquery(q) => rewrite_query(q, map),
        _ => {
            for child in children_mut(e) {
                rewrite_expr(child, map);
            }
        }
    }
}

fn substitute_aliases(e: &mut Expr, outputs: &[Expr]) {
    if let Expr::Column(ColumnRef {
        binding: Binding::OutputAlias(i),
        ..
    }) = e
    {
        if let Some(target) = outputs.get(*i) {
            *e = target.clone();
        }
        return;
    }
    for child in children_mut(e) {
        substitute_aliases(child, outputs);
    }
}

/// Mutable counterpart of [`Expr::children`].
pub(crate) fn children_mut(e: &mut Expr) -> Vec<&mut Expr> {
    match e {
        Expr::Column(_) | Expr::Star { .. } | Expr::Literal(_) => vec![],
        Expr::Exists { .. } | Expr::Subquery(_) => vec![],
        Expr::Unary { expr, .. }
        | Expr::IsNull { expr, .. }
        | Expr::Cast { expr, .. }
        | Expr::Collate { expr, .. }
        | Expr::InSubquery { expr, .. } => vec![expr],
        Expr::Binary { left, right, .. } => vec![left, right],
        Expr::Function { args, .. } => match args {
            FunctionArgs::Star => vec![],
            FunctionArgs::List(list) => list.iter_mut().collect(),
        },
        Expr::InList { expr, list, .. } => {
            let mut v: Vec<&mut Expr> = vec![expr];
            v.extend(list.iter_mut());
            v
        }
        Expr::Between {
            expr, low, high, ..
        } => vec![expr, low, high],
        Expr::Pattern { expr, pattern, .. } => vec![expr, pattern],
        Expr::Case {
            operand,
            branches,
            else_result,
        } => {
            let mut v: Vec<&mut Expr> = Vec::new();
            if let Some(op) = operand {
                v.push(op);
            }
            for b in branches {
                v.push(&mut b.when);
                v.push(&mut b.then);
            }
            if let Some(el) = else_result {
                v.push(el);
            }
            v
        }
    }
}
