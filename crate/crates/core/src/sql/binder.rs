//! Name resolution against a [`DatabaseSchema`].

use super::ast::*;
use super::error::{ParseError, ParseErrorKind};
use crate::schema::DatabaseSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindMode {
    /// Unknown tables and columns are errors.
    Strict,
    /// Unknown columns stay in the tree as [`Binding::Unresolved`].
    /// Unknown tables are still errors.
    Lenient,
}

pub fn bind(ast: &mut SqlAst, schema: &DatabaseSchema, mode: BindMode) -> Result<(), ParseError> {
    let mut b = Binder {
        schema,
        mode,
        scopes: Vec::new(),
    };
    b.query(ast)
}

#[derive(Debug, Clone)]
struct ScopeSource {
    id: SourceId,
    alias: Option<String>,
    table: Option<String>,
    columns: Vec<String>,
}

impl ScopeSource {
    fn answers_to(&self, qualifier: &str) -> bool {
        match (&self.alias, &self.table) {
            (Some(a), _) if a.eq_ignore_ascii_case(qualifier) => true,
            (_, Some(t)) => t.eq_ignore_ascii_case(qualifier),
            _ => false,
        }
    }

    fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Default)]
struct Scope {
    sources: Vec<ScopeSource>,
    aliases: Vec<Option<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Clause {
    Select,
    On,
    Where,
    GroupBy,
    Having,
    OrderBy,
}

enum Resolution {
    Source(SourceId),
    Alias(usize),
    Ambiguous,
    Missing,
}

struct Binder<'s> {
    schema: &'s DatabaseSchema,
    mode: BindMode,
    scopes: Vec<Scope>,
}

impl Binder<'_> {
    fn query(&mut self, q: &mut SqlAst) -> Result<(), ParseError> {
        let mut scope = Scope::default();
        for source in &mut q.from {
            let entry = match &mut source.relation {
                Relation::Table { name, schema_index } => {
                    let idx = self.schema.table_index(name).ok_or_else(|| {
                        ParseError::new(
                            ParseErrorKind::UnknownTable,
                            0,
                            format!("no such table: {name}"),
                        )
                    })?;
                    *schema_index = Some(idx);
                    ScopeSource {
                        id: source.id,
                        alias: source.alias.clone(),
                        table: Some(name.clone()),
                        columns: self.schema.tables[idx]
                            .columns
                            .iter()
                            .map(|c| c.name.clone())
                            .collect(),
                    }
                }
                Relation::Subquery(sub) => {
                    self.query(sub)?;
                    ScopeSource {
                        id: source.id,
                        alias: source.alias.clone(),
                        table: None,
                        columns: self.output_names(sub),
                    }
                }
            };
            scope.sources.push(entry);
        }
        scope.aliases = q.select_items.iter().map(|s| s.alias.clone()).collect();
        self.scopes.push(scope);
        let result = self.clauses(q);
        self.scopes.pop();
        result?;
        if let Some(op) = &mut q.set_op {
            self.query(&mut op.right)?;
        }
        Ok(())
    }

    fn clauses(&mut self, q: &mut SqlAst) -> Result<(), ParseError> {
        for source in &mut q.from {
            if let Some(cond) = &mut source.condition {
                self.expr(cond, Clause::On)?;
            }
        }
        for item in &mut q.select_items {
            self.expr(&mut item.expr, Clause::Select)?;
        }
        if let Some(w) = &mut q.where_clause {
            if w.contains_aggregate() {
                return Err(ParseError::new(
                    ParseErrorKind::Invalid,
                    0,
                    "misuse of aggregate function in WHERE",
                ));
            }
            self.expr(w, Clause::Where)?;
        }
        for g in &mut q.group_by {
            self.expr(g, Clause::GroupBy)?;
        }
        if let Some(h) = &mut q.having {
            self.expr(h, Clause::Having)?;
        }
        for o in &mut q.order_by {
            self.expr(&mut o.expr, Clause::OrderBy)?;
        }
        Ok(())
    }

    /// Column names a derived table exposes.
    fn output_names(&self, q: &SqlAst) -> Vec<String> {
        let mut names = Vec::new();
        for item in &q.select_items {
            match (&item.alias, &item.expr) {
                (Some(a), _) => names.push(a.clone()),
                (None, Expr::Column(c)) => names.push(c.name.clone()),
                (None, Expr::Star { qualifier, .. }) => {
                    for s in &q.from {
                        let matches = qualifier.as_deref().map_or(true, |qual| {
                            s.exposed_name().is_some_and(|n| n.eq_ignore_ascii_case(qual))
                        });
                        if !matches {
                            continue;
                        }
                        match &s.relation {
                            Relation::Table {
                                schema_index: Some(i),
                                ..
                            } => names.extend(
                                self.schema.tables[*i].columns.iter().map(|c| c.name.clone()),
                            ),
                            Relation::Subquery(sub) => names.extend(self.output_names(sub)),
                            _ => {}
                        }
                    }
                }
                (None, other) => names.push(super::printer::expr_to_sql(other)),
            }
        }
        names
    }

    fn expr(&mut self, e: &mut Expr, clause: Clause) -> Result<(), ParseError> {
        match e {
            Expr::Column(col) => {
                col.binding = self.resolve_column(col.qualifier.as_deref(), &col.name, clause)?;
            }
            Expr::Literal(Literal::DoubleQuoted(text)) => {
                let text = std::mem::take(text);
                *e = match self.lookup_unqualified(&text, clause) {
                    Resolution::Source(id) => Expr::Column(ColumnRef {
                        qualifier: None,
                        name: text,
                        binding: Binding::Source(id),
                    }),
                    _ => Expr::Literal(Literal::String(text)),
                };
            }
            Expr::Star { qualifier, source } => {
                if let Some(qual) = qualifier {
                    let found = self
                        .scopes
                        .iter()
                        .rev()
                        .find_map(|s| s.sources.iter().find(|src| src.answers_to(qual)));
                    match found {
                        Some(src) => *source = Some(src.id),
                        None => {
                            return Err(ParseError::new(
                                ParseErrorKind::UnknownTable,
                                0,
                                format!("no such table: {qual}"),
                            ))
                        }
                    }
                }
            }
            Expr::InSubquery { expr, subquery, .. } => {
                self.expr(expr, clause)?;
                self.query(subquery)?;
            }
            Expr::Exists { subquery, .. } => self.query(subquery)?,
            Expr::Subquery(q) => self.query(q)?,
            Expr::Literal(_) => {}
            Expr::Unary { expr, .. }
            | Expr::IsNull { expr, .. }
            | Expr::Cast { expr, .. }
            | Expr::Collate { expr, .. } => self.expr(expr, clause)?,
            Expr::Binary { left, right, .. } => {
                self.expr(left, clause)?;
                self.expr(right, clause)?;
            }
            Expr::Function { args, .. } => {
                if let FunctionArgs::List(list) = args {
                    for a in list {
                        self.expr(a, clause)?;
                    }
                }
            }
            Expr::InList { expr, list, .. } => {
                self.expr(expr, clause)?;
                for a in list {
                    self.expr(a, clause)?;
                }
            }
            Expr::Between {
                expr, low, high, ..
            } => {
                self.expr(expr, clause)?;
                self.expr(low, clause)?;
                self.expr(high, clause)?;
            }
            Expr::Pattern { expr, pattern, .. } => {
                self.expr(expr, clause)?;
                self.expr(pattern, clause)?;
            }
            Expr::Case {
                operand,
                branches,
                else_result,
            } => {
                if let Some(op) = operand {
                    self.expr(op, clause)?;
                }
                for b in branches {
                    self.expr(&mut b.when, clause)?;
                    self.expr(&mut b.then, clause)?;
                }
                if let Some(el) = else_result {
                    self.expr(el, clause)?;
                }
            }
        }
        Ok(())
    }

    fn resolve_column(
        &self,
        qualifier: Option<&str>,
        name: &str,
        clause: Clause,
    ) -> Result<Binding, ParseError> {
        let resolution = match qualifier {
            Some(q) => self.lookup_qualified(q, name),
            None => self.lookup_unqualified(name, clause),
        };
        match resolution {
            Resolution::Source(id) => Ok(Binding::Source(id)),
            Resolution::Alias(i) => Ok(Binding::OutputAlias(i)),
            Resolution::Ambiguous => Ok(Binding::Ambiguous),
            Resolution::Missing => match self.mode {
                BindMode::Lenient => Ok(Binding::Unresolved),
                BindMode::Strict => {
                    let full = match qualifier {
                        Some(q) => format!("{q}.{name}"),
                        None => name.to_string(),
                    };
                    Err(ParseError::new(
                        ParseErrorKind::UnknownColumn,
                        0,
                        format!("no such column: {full}"),
                    ))
                }
            },
        }
    }

    fn lookup_qualified(&self, qualifier: &str, name: &str) -> Resolution {
        for scope in self.scopes.iter().rev() {
            // An alias shadows the table name it stands for.
            let by_alias = scope.sources.iter().find(|s| {
                s.alias
                    .as_deref()
                    .is_some_and(|a| a.eq_ignore_ascii_case(qualifier))
            });
            let src = by_alias.or_else(|| scope.sources.iter().find(|s| s.answers_to(qualifier)));
            if let Some(src) = src {
                return if src.has_column(name) {
                    Resolution::Source(src.id)
                } else {
                    Resolution::Missing
                };
            }
        }
        Resolution::Missing
    }

    fn lookup_unqualified(&self, name: &str, clause: Clause) -> Resolution {
        let alias_index = |scope: &Scope| {
            scope
                .aliases
                .iter()
                .position(|a| a.as_deref().is_some_and(|a| a.eq_ignore_ascii_case(name)))
        };
        for (depth, scope) in self.scopes.iter().rev().enumerate() {
            let innermost = depth == 0;
            if innermost && clause == Clause::OrderBy {
                if let Some(i) = alias_index(scope) {
                    return Resolution::Alias(i);
                }
            }
            let mut hits = scope.sources.iter().filter(|s| s.has_column(name));
            if let Some(first) = hits.next() {
                return if hits.next().is_some() {
                    Resolution::Ambiguous
                } else {
                    Resolution::Source(first.id)
                };
            }
            if innermost
                && matches!(clause, Clause::Where | Clause::GroupBy | Clause::Having)
            {
                if let Some(i) = alias_index(scope) {
                    return Resolution::Alias(i);
                }
            }
        }
        Resolution::Missing
    }
}
