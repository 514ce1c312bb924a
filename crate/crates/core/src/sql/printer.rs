//! SQL text generation: executable SQL, skeletons, and the labelled
//! renderings used by the structural diff.

use std::collections::HashMap;
use std::fmt;

use super::ast::*;
use super::parser::is_reserved;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Style {
    Sql,
    /// Identifiers and literals become `_`.
    Skeleton,
    /// Literals become `?`; everything else printed as SQL.
    MaskLiterals,
}

const PRIMARY_PRECEDENCE: u8 = 11;

struct Printer<'a> {
    style: Style,
    labels: Option<&'a HashMap<SourceId, String>>,
    out: String,
}

pub fn to_sql(ast: &SqlAst) -> String {
    let mut p = Printer::new(Style::Sql, None);
    p.query(ast);
    p.out
}

pub fn expr_to_sql(e: &Expr) -> String {
    let mut p = Printer::new(Style::Sql, None);
    p.expr(e, 0);
    p.out
}

/// Keyword skeleton: every column reference, table reference and literal is
/// replaced by `_`, and a select item made only of placeholders collapses to
/// a single `_`.
pub fn to_skeleton(ast: &SqlAst) -> String {
    let mut p = Printer::new(Style::Skeleton, None);
    p.query(ast);
    p.out
}

/// Renders with column references qualified by `labels[source]`.
pub(crate) fn labelled_expr(e: &Expr, labels: &HashMap<SourceId, String>, mask: bool) -> String {
    let style = if mask { Style::MaskLiterals } else { Style::Sql };
    let mut p = Printer::new(style, Some(labels));
    p.expr(e, 0);
    p.out
}

pub(crate) fn labelled_query(q: &SqlAst, labels: &HashMap<SourceId, String>, mask: bool) -> String {
    let style = if mask { Style::MaskLiterals } else { Style::Sql };
    let mut p = Printer::new(style, Some(labels));
    p.query(q);
    p.out
}

impl fmt::Display for SqlAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_sql(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&expr_to_sql(self))
    }
}

pub fn quote_ident(name: &str) -> String {
    let plain = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !is_reserved(name);
    if plain {
        name.to_string()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}

pub fn quote_string(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn expr_precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op, .. } => op.precedence(),
        Expr::Unary { op: UnaryOp::Not, .. } => NOT_PRECEDENCE,
        Expr::Exists { negated: true, .. } => NOT_PRECEDENCE,
        Expr::Unary { .. } | Expr::Collate { .. } => UNARY_PRECEDENCE,
        Expr::InList { .. }
        | Expr::InSubquery { .. }
        | Expr::Between { .. }
        | Expr::Pattern { .. }
        | Expr::IsNull { .. } => PREDICATE_PRECEDENCE,
        _ => PRIMARY_PRECEDENCE,
    }
}

impl<'a> Printer<'a> {
    fn new(style: Style, labels: Option<&'a HashMap<SourceId, String>>) -> Self {
        Self {
            style,
            labels,
            out: String::new(),
        }
    }

    fn push(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn skeleton(&self) -> bool {
        self.style == Style::Skeleton
    }

    fn query(&mut self, q: &SqlAst) {
        self.push("SELECT ");
        if q.distinct {
            self.push("DISTINCT ");
        }
        for (i, item) in q.select_items.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            self.select_item(item);
        }
        if !q.from.is_empty() {
            self.push(" FROM ");
            for s in &q.from {
                self.source(s);
            }
        }
        if let Some(w) = &q.where_clause {
            self.push(" WHERE ");
            self.expr(w, 0);
        }
        if !q.group_by.is_empty() {
            self.push(" GROUP BY ");
            for (i, g) in q.group_by.iter().enumerate() {
                if i > 0 {
                    self.push(", ");
                }
                self.expr(g, 0);
            }
        }
        if let Some(h) = &q.having {
            self.push(" HAVING ");
            self.expr(h, 0);
        }
        if let Some(op) = &q.set_op {
            self.push(" ");
            self.push(op.op.keyword());
            self.push(" ");
            self.query(&op.right);
        }
        if !q.order_by.is_empty() {
            self.push(" ORDER BY ");
            for (i, o) in q.order_by.iter().enumerate() {
                if i > 0 {
                    self.push(", ");
                }
                self.expr(&o.expr, 0);
                if o.direction == Direction::Desc {
                    self.push(" DESC");
                }
            }
        }
        if let Some(limit) = q.limit {
            if self.skeleton() {
                self.push(" LIMIT _");
            } else {
                self.push(&format!(" LIMIT {limit}"));
            }
            if let Some(off) = q.offset {
                if self.skeleton() {
                    self.push(" OFFSET _");
                } else {
                    self.push(&format!(" OFFSET {off}"));
                }
            }
        }
    }

    fn select_item(&mut self, item: &SelectItem) {
        if self.skeleton() {
            let start = self.out.len();
            self.expr(&item.expr, 0);
            let rendered = &self.out[start..];
            let only_placeholders = rendered
                .chars()
                .all(|c| c == '_' || c == ' ' || c == '(' || c == ')' || "+-*/%|<>=!&~.".contains(c))
                && rendered.contains('_');
            if only_placeholders {
                self.out.truncate(start);
                self.push("_");
            }
            return;
        }
        self.expr(&item.expr, 0);
        if self.labels.is_some() {
            return;
        }
        if let Some(a) = &item.alias {
            self.push(" AS ");
            self.push(&quote_ident(a));
        }
    }

    fn source(&mut self, s: &Source) {
        match s.join {
            JoinKind::First => {}
            JoinKind::Comma => self.push(", "),
            JoinKind::Inner => self.push(" JOIN "),
            JoinKind::Left => self.push(" LEFT JOIN "),
            JoinKind::Cross => self.push(" CROSS JOIN "),
        }
        match &s.relation {
            Relation::Table { name, .. } => {
                if self.skeleton() {
                    self.push("_");
                } else if let Some(label) = self.labels.and_then(|l| l.get(&s.id)) {
                    let label = label.clone();
                    self.push(&label);
                } else {
                    self.push(&quote_ident(name));
                }
            }
            Relation::Subquery(q) => {
                self.push("(");
                self.query(q);
                self.push(")");
            }
        }
        if !self.skeleton() && self.labels.is_none() {
            if let Some(a) = &s.alias {
                self.push(" AS ");
                self.push(&quote_ident(a));
            }
        }
        if let Some(c) = &s.condition {
            self.push(" ON ");
            self.expr(c, 0);
        }
    }

    fn child(&mut self, e: &Expr, min: u8) {
        if expr_precedence(e) < min {
            self.push("(");
            self.expr(e, 0);
            self.push(")");
        } else {
            self.expr(e, min);
        }
    }

    fn literal(&mut self, lit: &Literal) {
        match self.style {
            Style::Skeleton => self.push("_"),
            Style::MaskLiterals => self.push("?"),
            Style::Sql => match lit {
                Literal::Number(n) => self.push(n),
                Literal::String(s) => self.push(&quote_string(s)),
                Literal::DoubleQuoted(s) => self.push(&format!("\"{}\"", s.replace('"', "\"\""))),
                Literal::Null => self.push("NULL"),
            },
        }
    }

    fn column(&mut self, c: &ColumnRef) {
        if self.skeleton() {
            self.push("_");
            return;
        }
        if let (Some(labels), Binding::Source(id)) = (self.labels, &c.binding) {
            if let Some(label) = labels.get(id) {
                let text = format!("{label}.{}", quote_ident(&c.name));
                self.push(&text);
                return;
            }
        }
        if let Some(q) = &c.qualifier {
            self.push(&quote_ident(q));
            self.push(".");
        }
        self.push(&quote_ident(&c.name));
    }

    fn expr(&mut self, e: &Expr, _min: u8) {
        match e {
            Expr::Column(c) => self.column(c),
            Expr::Star { qualifier, source } => {
                if !self.skeleton() {
                    let label = source.and_then(|id| self.labels.and_then(|l| l.get(&id)).cloned());
                    if let Some(label) = label {
                        self.push(&label);
                        self.push(".");
                    } else if let Some(q) = qualifier {
                        self.push(&quote_ident(q));
                        self.push(".");
                    }
                }
                self.push("*");
            }
            Expr::Literal(lit) => self.literal(lit),
            Expr::Unary { op, expr } => match op {
                UnaryOp::Not => {
                    self.push("NOT ");
                    self.child(expr, NOT_PRECEDENCE + 1);
                }
                UnaryOp::Neg | UnaryOp::Plus | UnaryOp::BitNot => {
                    let sym = match op {
                        UnaryOp::Neg => "-",
                        UnaryOp::Plus => "+",
                        _ => "~",
                    };
                    self.push(sym);
                    let start = self.out.len();
                    self.child(expr, UNARY_PRECEDENCE);
                    // `--` would start a comment.
                    if self.out[start..].starts_with(['-', '+']) {
                        self.out.insert(start, ' ');
                    }
                }
            },
            Expr::Binary { op, left, right } => {
                let p = op.precedence();
                self.child(left, p);
                self.push(" ");
                self.push(op.symbol());
                self.push(" ");
                self.child(right, p + 1);
            }
            Expr::Function {
                name,
                distinct,
                args,
            } => {
                if self.skeleton() {
                    self.push(&name.to_lowercase());
                } else {
                    self.push(name);
                }
                self.push("(");
                match args {
                    FunctionArgs::Star => self.push("*"),
                    FunctionArgs::List(list) => {
                        if *distinct {
                            self.push("DISTINCT ");
                        }
                        for (i, a) in list.iter().enumerate() {
                            if i > 0 {
                                self.push(", ");
                            }
                            self.expr(a, 0);
                        }
                    }
                }
                self.push(")");
            }
            Expr::InList {
                expr,
                list,
                negated,
            } => {
                self.child(expr, PREDICATE_PRECEDENCE);
                self.push(if *negated { " NOT IN (" } else { " IN (" });
                for (i, a) in list.iter().enumerate() {
                    if i > 0 {
                        self.push(", ");
                    }
                    self.expr(a, 0);
                }
                self.push(")");
            }
            Expr::InSubquery {
                expr,
                subquery,
                negated,
            } => {
                self.child(expr, PREDICATE_PRECEDENCE);
                self.push(if *negated { " NOT IN (" } else { " IN (" });
                self.query(subquery);
                self.push(")");
            }
            Expr::Between {
                expr,
                low,
                high,
                negated,
            } => {
                self.child(expr, PREDICATE_PRECEDENCE);
                self.push(if *negated { " NOT BETWEEN " } else { " BETWEEN " });
                self.child(low, PREDICATE_PRECEDENCE + 1);
                self.push(" AND ");
                self.child(high, PREDICATE_PRECEDENCE + 1);
            }
            Expr::Pattern {
                op,
                expr,
                pattern,
                negated,
            } => {
                self.child(expr, PREDICATE_PRECEDENCE);
                self.push(if *negated { " NOT" } else { "" });
                self.push(match op {
                    PatternOp::Like => " LIKE ",
                    PatternOp::Glob => " GLOB ",
                });
                self.child(pattern, PREDICATE_PRECEDENCE + 1);
            }
            Expr::IsNull { expr, negated } => {
                self.child(expr, PREDICATE_PRECEDENCE);
                self.push(if *negated { " IS NOT NULL" } else { " IS NULL" });
            }
            Expr::Exists { subquery, negated } => {
                self.push(if *negated { "NOT EXISTS (" } else { "EXISTS (" });
                self.query(subquery);
                self.push(")");
            }
            Expr::Subquery(q) => {
                self.push("(");
                self.query(q);
                self.push(")");
            }
            Expr::Case {
                operand,
                branches,
                else_result,
            } => {
                self.push("CASE");
                if let Some(op) = operand {
                    self.push(" ");
                    self.expr(op, 0);
                }
                for b in branches {
                    self.push(" WHEN ");
                    self.expr(&b.when, 0);
                    self.push(" THEN ");
                    self.expr(&b.then, 0);
                }
                if let Some(el) = else_result {
                    self.push(" ELSE ");
                    self.expr(el, 0);
                }
                self.push(" END");
            }
            Expr::Cast { expr, type_name } => {
                self.push("CAST(");
                self.expr(expr, 0);
                self.push(" AS ");
                self.push(type_name);
                self.push(")");
            }
            Expr::Collate { expr, collation } => {
                self.child(expr, UNARY_PRECEDENCE);
                self.push(" COLLATE ");
                self.push(&quote_ident(collation));
            }
        }
    }
}
