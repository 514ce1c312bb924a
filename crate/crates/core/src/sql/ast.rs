//! Structural representation of a SELECT query.
//!
//! Nodes keep identifiers as written; [`crate::sql::canonicalize`] produces
//! the alias- and case-normalised form used for comparison.

use serde::Serialize;

/// Identity of a FROM-clause source, unique within one parsed statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SourceId(pub u32);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqlAst {
    pub distinct: bool,
    pub select_items: Vec<SelectItem>,
    pub from: Vec<Source>,
    pub where_clause: Option<Expr>,
    pub group_by: Vec<Expr>,
    pub having: Option<Expr>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
    /// Compound operator joining this core to the next one. A trailing
    /// ORDER BY / LIMIT belongs to the right-most core, as written.
    pub set_op: Option<SetOperation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetOperation {
    pub op: SetOperator,
    pub right: Box<SqlAst>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SetOperator {
    Union,
    UnionAll,
    Intersect,
    Except,
}

impl SetOperator {
    pub fn keyword(self) -> &'static str {
        match self {
            SetOperator::Union => "UNION",
            SetOperator::UnionAll => "UNION ALL",
            SetOperator::Intersect => "INTERSECT",
            SetOperator::Except => "EXCEPT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Source {
    pub id: SourceId,
    pub relation: Relation,
    pub alias: Option<String>,
    pub join: JoinKind,
    pub condition: Option<Expr>,
}

impl Source {
    /// Name usable as a qualifier: the alias, else the table name.
    pub fn exposed_name(&self) -> Option<&str> {
        match (&self.alias, &self.relation) {
            (Some(a), _) => Some(a),
            (None, Relation::Table { name, .. }) => Some(name),
            (None, Relation::Subquery(_)) => None,
        }
    }

    pub fn table_name(&self) -> Option<&str> {
        match &self.relation {
            Relation::Table { name, .. } => Some(name),
            Relation::Subquery(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Table {
        name: String,
        /// Index into the schema's table list once bound.
        schema_index: Option<usize>,
    },
    Subquery(Box<SqlAst>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinKind {
    /// The first source in a FROM list.
    First,
    Comma,
    Inner,
    Left,
    Cross,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderItem {
    pub expr: Expr,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnRef {
    pub qualifier: Option<String>,
    pub name: String,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Unbound,
    Source(SourceId),
    /// Reference to the n-th select item by its output alias.
    OutputAlias(usize),
    /// Matches columns of more than one source in the same scope.
    Ambiguous,
    /// Left unresolved by lenient binding.
    Unresolved,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Literal {
    /// Numeric text exactly as written.
    Number(String),
    String(String),
    /// `"x"` before binding decides between identifier and string.
    DoubleQuoted(String),
    Null,
}

impl Literal {
    pub fn numeric_value(&self) -> Option<f64> {
        match self {
            Literal::Number(text) => parse_number(text),
            _ => None,
        }
    }
}

pub(crate) fn parse_number(text: &str) -> Option<f64> {
    if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        return i64::from_str_radix(hex, 16).ok().map(|v| v as f64);
    }
    text.parse::<f64>().ok()
}

/// Numbers compare by value (`3` equals `3.0`); strings compare exactly.
impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Literal::Number(a), Literal::Number(b)) => match (parse_number(a), parse_number(b)) {
                (Some(x), Some(y)) => x == y,
                _ => a == b,
            },
            (Literal::String(a), Literal::String(b)) => a == b,
            (Literal::DoubleQuoted(a), Literal::DoubleQuoted(b)) => a == b,
            (Literal::Null, Literal::Null) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnaryOp {
    Not,
    Neg,
    Plus,
    BitNot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    NotEq,
    Is,
    IsNot,
    Lt,
    LtEq,
    Gt,
    GtEq,
    BitAnd,
    BitOr,
    ShiftLeft,
    ShiftRight,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Concat,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "OR",
            BinaryOp::And => "AND",
            BinaryOp::Eq => "=",
            BinaryOp::NotEq => "!=",
            BinaryOp::Is => "IS",
            BinaryOp::IsNot => "IS NOT",
            BinaryOp::Lt => "<",
            BinaryOp::LtEq => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::GtEq => ">=",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::ShiftLeft => "<<",
            BinaryOp::ShiftRight => ">>",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Concat => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::NotEq | BinaryOp::Is | BinaryOp::IsNot => 4,
            BinaryOp::Lt | BinaryOp::LtEq | BinaryOp::Gt | BinaryOp::GtEq => 5,
            BinaryOp::BitAnd | BinaryOp::BitOr | BinaryOp::ShiftLeft | BinaryOp::ShiftRight => 6,
            BinaryOp::Add | BinaryOp::Sub => 7,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 8,
            BinaryOp::Concat => 9,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq
                | BinaryOp::NotEq
                | BinaryOp::Is
                | BinaryOp::IsNot
                | BinaryOp::Lt
                | BinaryOp::LtEq
                | BinaryOp::Gt
                | BinaryOp::GtEq
        )
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod
        )
    }
}

/// Precedence of the predicate forms (IN, LIKE, BETWEEN, IS NULL).
pub const PREDICATE_PRECEDENCE: u8 = 4;
/// Precedence of prefix NOT.
pub const NOT_PRECEDENCE: u8 = 3;
/// Precedence of unary minus, plus, bitwise not and COLLATE.
pub const UNARY_PRECEDENCE: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternOp {
    Like,
    Glob,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionArgs {
    Star,
    List(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseBranch {
    pub when: Expr,
    pub then: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Column(ColumnRef),
    Star {
        qualifier: Option<String>,
        source: Option<SourceId>,
    },
    Literal(Literal),
    Unary {
        op: UnaryOp,
        expr: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Function {
        name: String,
        distinct: bool,
        args: FunctionArgs,
    },
    InList {
        expr: Box<Expr>,
        list: Vec<Expr>,
        negated: bool,
    },
    InSubquery {
        expr: Box<Expr>,
        subquery: Box<SqlAst>,
        negated: bool,
    },
    Between {
        expr: Box<Expr>,
        low: Box<Expr>,
        high: Box<Expr>,
        negated: bool,
    },
    Pattern {
        op: PatternOp,
        expr: Box<Expr>,
        pattern: Box<Expr>,
        negated: bool,
    },
    IsNull {
        expr: Box<Expr>,
        negated: bool,
    },
    Exists {
        subquery: Box<SqlAst>,
        negated: bool,
    },
    Subquery(Box<SqlAst>),
    Case {
        operand: Option<Box<Expr>>,
        branches: Vec<CaseBranch>,
        else_result: Option<Box<Expr>>,
    },
    Cast {
        expr: Box<Expr>,
        type_name: String,
    },
    Collate {
        expr: Box<Expr>,
        collation: String,
    },
}

const AGGREGATES: &[&str] = &["count", "sum", "avg", "min", "max", "total", "group_concat"];

pub fn is_aggregate_name(name: &str) -> bool {
    AGGREGATES.iter().any(|a| a.eq_ignore_ascii_case(name))
}

impl Expr {
    pub fn is_aggregate_call(&self) -> bool {
        matches!(self, Expr::Function { name, .. } if is_aggregate_name(name))
    }

    /// Direct sub-expressions, not descending into subqueries.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
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
                FunctionArgs::List(list) => list.iter().collect(),
            },
            Expr::InList { expr, list, .. } => {
                let mut v: Vec<&Expr> = vec![expr];
                v.extend(list.iter());
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
                let mut v: Vec<&Expr> = Vec::new();
                if let Some(op) = operand {
                    v.push(op);
                }
                for b in branches {
                    v.push(&b.when);
                    v.push(&b.then);
                }
                if let Some(e) = else_result {
                    v.push(e);
                }
                v
            }
        }
    }

    /// Subqueries directly owned by this node.
    pub fn own_subqueries(&self) -> Vec<&SqlAst> {
        match self {
            Expr::InSubquery { subquery, .. } | Expr::Exists { subquery, .. } => vec![subquery],
            Expr::Subquery(q) => vec![q],
            _ => vec![],
        }
    }

    /// Pre-order walk over this expression, not entering subqueries.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for child in self.children() {
            child.walk(f);
        }
    }

    /// Every subquery reachable from this expression without crossing
    /// another subquery boundary.
    pub fn subqueries(&self) -> Vec<&SqlAst> {
        let mut out = Vec::new();
        self.walk(&mut |e| out.extend(e.own_subqueries()));
        out
    }

    pub fn contains_aggregate(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= e.is_aggregate_call());
        found
    }
}

impl SqlAst {
    pub fn empty() -> Self {
        SqlAst {
            distinct: false,
            select_items: Vec::new(),
            from: Vec::new(),
            where_clause: None,
            group_by: Vec::new(),
            having: None,
            order_by: Vec::new(),
            limit: None,
            offset: None,
            set_op: None,
        }
    }

    /// Expressions owned by this core (not its compound partner), in clause order.
    pub fn clause_exprs(&self) -> Vec<&Expr> {
        let mut v: Vec<&Expr> = self.select_items.iter().map(|s| &s.expr).collect();
        v.extend(self.from.iter().filter_map(|s| s.condition.as_ref()));
        v.extend(self.where_clause.iter());
        v.extend(self.group_by.iter());
        v.extend(self.having.iter());
        v.extend(self.order_by.iter().map(|o| &o.expr));
        v
    }

    /// Nested queries directly below this core: derived tables, expression
    /// subqueries and the compound right-hand side.
    pub fn nested_queries(&self) -> Vec<&SqlAst> {
        let mut v: Vec<&SqlAst> = Vec::new();
        for s in &self.from {
            if let Relation::Subquery(q) = &s.relation {
                v.push(q);
            }
        }
        for e in self.clause_exprs() {
            v.extend(e.subqueries());
        }
        if let Some(op) = &self.set_op {
            v.push(&op.right);
        }
        v
    }

    /// Total number of nested SELECTs anywhere below this one.
    pub fn count_nested(&self) -> usize {
        self.nested_queries()
            .iter()
            .map(|q| 1 + q.count_nested())
            .sum()
    }

    /// Visits this query and every nested query, pre-order.
    pub fn visit_queries<'a>(&'a self, f: &mut dyn FnMut(&'a SqlAst)) {
        f(self);
        for q in self.nested_queries() {
            q.visit_queries(f);
        }
    }

    pub fn has_order_by(&self) -> bool {
        !self.last_core().order_by.is_empty()
    }

    /// The right-most core of a compound query (the query itself otherwise).
    pub fn last_core(&self) -> &SqlAst {
        let mut q = self;
        while let Some(op) = &q.set_op {
            q = &op.right;
        }
        q
    }

    pub fn last_core_mut(&mut self) -> &mut SqlAst {
        let mut q = self;
        while q.set_op.is_some() {
            q = &mut q.set_op.as_mut().expect("checked").right;
        }
        q
    }
}
