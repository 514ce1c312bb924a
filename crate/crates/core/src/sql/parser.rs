//! Recursive-descent parser for the SQLite SELECT subset.
//!
//! Produces an unbound [`SqlAst`]; name resolution happens in the binder.

use super::ast::*;
use super::error::{ParseError, ParseErrorKind};
use super::lexer::{tokenize, Token, TokenKind};

/// Nesting limit for expressions and subqueries.
const MAX_DEPTH: usize = 128;

const RESERVED: &[&str] = &[
    "ALL", "ALTER", "AND", "AS", "ASC", "BETWEEN", "BY", "CASE", "CAST", "COLLATE", "CREATE",
    "CROSS", "DELETE", "DESC", "DISTINCT", "DROP", "ELSE", "END", "ESCAPE", "EXCEPT", "EXISTS",
    "FROM", "FULL", "GLOB", "GROUP", "HAVING", "IN", "INNER", "INSERT", "INTERSECT", "INTO", "IS",
    "ISNULL", "JOIN", "LEFT", "LIKE", "LIMIT", "NATURAL", "NOT", "NOTNULL", "NULL", "OFFSET", "ON",
    "OR", "ORDER", "OUTER", "RIGHT", "SELECT", "SET", "THEN", "UNION", "UPDATE", "USING", "VALUES",
    "WHEN", "WHERE", "WITH",
];

const STATEMENT_KEYWORDS: &[&str] = &[
    "WITH", "INSERT", "UPDATE", "DELETE", "CREATE", "DROP", "ALTER", "PRAGMA", "REPLACE",
    "VALUES", "EXPLAIN", "ATTACH", "DETACH", "VACUUM", "BEGIN", "COMMIT", "ROLLBACK",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|k| k.eq_ignore_ascii_case(word))
}

/// Parses one SELECT statement without resolving names.
pub fn parse_unbound(sql: &str) -> Result<SqlAst, ParseError> {
    let tokens = tokenize(sql)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        next_source: 0,
        depth: 0,
        end: sql.len(),
    };
    p.statement()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    next_source: u32,
    depth: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn err(&self, kind: ParseErrorKind, msg: impl Into<String>) -> ParseError {
        ParseError::new(kind, self.offset(), msg)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.err(
                ParseErrorKind::Syntax,
                format!("expected {expected}, found `{}`", t.kind),
            ),
            None => self.err(
                ParseErrorKind::Syntax,
                format!("expected {expected}, found end of input"),
            ),
        }
    }

    fn at_word(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_word(kw))
    }

    fn at_word_n(&self, n: usize, kw: &str) -> bool {
        self.peek_at(n).is_some_and(|t| t.is_word(kw))
    }

    fn eat_word(&mut self, kw: &str) -> bool {
        if self.at_word(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_word(kw) {
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek().is_some_and(|t| &t.kind == kind)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: &TokenKind) -> Result<(), ParseError> {
        if self.eat(kind) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kind}`")))
        }
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Op(o), .. }) if *o == op)
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err(ParseErrorKind::Unsupported, "query nested too deeply"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn statement(&mut self) -> Result<SqlAst, ParseError> {
        if let Some(Token {
            kind: TokenKind::Word(w),
            ..
        }) = self.peek()
        {
            if STATEMENT_KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(w)) {
                let w = w.to_uppercase();
                return Err(self.err(
                    ParseErrorKind::Unsupported,
                    format!("{w} statements are not supported; only SELECT"),
                ));
            }
        }
        let query = self.query()?;
        while self.eat(&TokenKind::Semicolon) {}
        if self.peek().is_some() {
            if self.at_word("SELECT") || self.peek_is_statement_keyword() {
                return Err(self.err(
                    ParseErrorKind::Unsupported,
                    "multiple statements are not supported",
                ));
            }
            return Err(self.unexpected("end of statement"));
        }
        Ok(query)
    }

    fn peek_is_statement_keyword(&self) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Word(w), .. })
            if STATEMENT_KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(w)))
    }

    fn query(&mut self) -> Result<SqlAst, ParseError> {
        self.enter()?;
        let mut first = self.core()?;
        // Compound chain, right-nested: a UNION (b EXCEPT c).
        let mut cores = Vec::new();
        while let Some(op) = self.set_operator() {
            let next = self.core()?;
            cores.push((op, next));
        }
        let mut order_by = Vec::new();
        if self.at_word("ORDER") && self.at_word_n(1, "BY") {
            self.pos += 2;
            order_by = self.comma_list(|p| p.order_item())?;
        }
        let (limit, offset) = self.limit_clause()?;
        if cores.is_empty() {
            first.order_by = order_by;
            first.limit = limit;
            first.offset = offset;
        } else {
            let (last_op, mut last) = cores.pop().expect("nonempty");
            last.order_by = order_by;
            last.limit = limit;
            last.offset = offset;
            let mut tail = SetOperation {
                op: last_op,
                right: Box::new(last),
            };
            while let Some((op, mut core)) = cores.pop() {
                core.set_op = Some(tail);
                tail = SetOperation {
                    op,
                    right: Box::new(core),
                };
            }
            first.set_op = Some(tail);
        }
        self.leave();
        Ok(first)
    }

    fn set_operator(&mut self) -> Option<SetOperator> {
        if self.eat_word("UNION") {
            if self.eat_word("ALL") {
                Some(SetOperator::UnionAll)
            } else {
                Some(SetOperator::Union)
            }
        } else if self.eat_word("INTERSECT") {
            Some(SetOperator::Intersect)
        } else if self.eat_word("EXCEPT") {
            Some(SetOperator::Except)
        } else {
            None
        }
    }

    fn limit_clause(&mut self) -> Result<(Option<u64>, Option<u64>), ParseError> {
        if !self.eat_word("LIMIT") {
            return Ok((None, None));
        }
        let first = self.non_negative_integer("LIMIT")?;
        if self.eat_word("OFFSET") {
            let off = self.non_negative_integer("OFFSET")?;
            return Ok((Some(first), Some(off)));
        }
        if self.eat(&TokenKind::Comma) {
            // LIMIT <offset>, <count>
            let count = self.non_negative_integer("LIMIT")?;
            return Ok((Some(count), Some(first)));
        }
        Ok((Some(first), None))
    }

    fn non_negative_integer(&mut self, clause: &str) -> Result<u64, ParseError> {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Number(n)) => match n.parse::<u64>() {
                Ok(v) => {
                    self.pos += 1;
                    Ok(v)
                }
                Err(_) => Err(self.err(
                    ParseErrorKind::Invalid,
                    format!("{clause} requires a non-negative integer, found `{n}`"),
                )),
            },
            Some(TokenKind::Op("-")) => Err(self.err(
                ParseErrorKind::Invalid,
                format!("{clause} must not be negative"),
            )),
            _ => Err(self.err(
                ParseErrorKind::Unsupported,
                format!("{clause} supports integer literals only"),
            )),
        }
    }

    fn core(&mut self) -> Result<SqlAst, ParseError> {
        if self.at(&TokenKind::LParen) && self.at_word_n(1, "SELECT") {
            return Err(self.err(
                ParseErrorKind::Unsupported,
                "parenthesised compound operands are not supported",
            ));
        }
        self.expect_word("SELECT")?;
        let mut q = SqlAst::empty();
        if self.eat_word("DISTINCT") {
            q.distinct = true;
        } else {
            self.eat_word("ALL");
        }
        q.select_items = self.comma_list(|p| p.select_item())?;
        if self.eat_word("FROM") {
            q.from = self.from_clause()?;
        }
        if self.eat_word("WHERE") {
            q.where_clause = Some(self.expr()?);
        }
        if self.at_word("GROUP") && self.at_word_n(1, "BY") {
            self.pos += 2;
            q.group_by = self.comma_list(|p| p.expr())?;
        }
        if self.eat_word("HAVING") {
            q.having = Some(self.expr()?);
        }
        Ok(q)
    }

    fn comma_list<T>(
        &mut self,
        mut item: impl FnMut(&mut Self) -> Result<T, ParseError>,
    ) -> Result<Vec<T>, ParseError> {
        let mut out = vec![item(self)?];
        while self.eat(&TokenKind::Comma) {
            out.push(item(self)?);
        }
        Ok(out)
    }

    fn select_item(&mut self) -> Result<SelectItem, ParseError> {
        if self.at_op("*") {
            self.pos += 1;
            return Ok(SelectItem {
                expr: Expr::Star {
                    qualifier: None,
                    source: None,
                },
                alias: None,
            });
        }
        let expr = self.expr()?;
        let alias = self.alias(true)?;
        Ok(SelectItem { expr, alias })
    }

    /// Optional `[AS] name`. String literals are accepted as select aliases.
    fn alias(&mut self, allow_string: bool) -> Result<Option<String>, ParseError> {
        let had_as = self.eat_word("AS");
        match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Word(w)) if !is_reserved(&w) => {
                self.pos += 1;
                Ok(Some(w))
            }
            Some(TokenKind::QuotedIdent { text, .. }) => {
                self.pos += 1;
                Ok(Some(text))
            }
            Some(TokenKind::Str(s)) if allow_string || had_as => {
                self.pos += 1;
                Ok(Some(s))
            }
            _ if had_as => Err(self.unexpected("alias after AS")),
            _ => Ok(None),
        }
    }

    fn from_clause(&mut self) -> Result<Vec<Source>, ParseError> {
        let mut sources = vec![self.source(JoinKind::First)?];
        loop {
            let kind = if self.eat(&TokenKind::Comma) {
                JoinKind::Comma
            } else if self.eat_word("JOIN") {
                JoinKind::Inner
            } else if self.at_word("INNER") && self.at_word_n(1, "JOIN") {
                self.pos += 2;
                JoinKind::Inner
            } else if self.at_word("CROSS") && self.at_word_n(1, "JOIN") {
                self.pos += 2;
                JoinKind::Cross
            } else if self.at_word("LEFT") {
                self.pos += 1;
                self.eat_word("OUTER");
                self.expect_word("JOIN")?;
                JoinKind::Left
            } else if self.at_word("NATURAL") || self.at_word("RIGHT") || self.at_word("FULL") {
                return Err(self.err(
                    ParseErrorKind::Unsupported,
                    "NATURAL, RIGHT and FULL joins are not supported",
                ));
            } else {
                break;
            };
            let mut source = self.source(kind)?;
            if self.eat_word("ON") {
                source.condition = Some(self.expr()?);
            } else if self.at_word("USING") {
                return Err(self.err(ParseErrorKind::Unsupported, "JOIN ... USING is not supported"));
            }
            sources.push(source);
        }
        Ok(sources)
    }

    fn new_source_id(&mut self) -> SourceId {
        let id = SourceId(self.next_source);
        self.next_source += 1;
        id
    }

    fn source(&mut self, join: JoinKind) -> Result<Source, ParseError> {
        let id = self.new_source_id();
        if self.eat(&TokenKind::LParen) {
            if !self.at_word("SELECT") {
                return Err(self.err(
                    ParseErrorKind::Unsupported,
                    "parenthesised join groups are not supported",
                ));
            }
            let q = self.query()?;
            self.expect(&TokenKind::RParen)?;
            let alias = self.alias(false)?;
            return Ok(Source {
                id,
                relation: Relation::Subquery(Box::new(q)),
                alias,
                join,
                condition: None,
            });
        }
        let name = self.identifier("table name")?;
        if self.at(&TokenKind::Dot) {
            return Err(self.err(
                ParseErrorKind::Unsupported,
                "schema-qualified table names are not supported",
            ));
        }
        let alias = self.alias(false)?;
        Ok(Source {
            id,
            relation: Relation::Table {
                name,
                schema_index: None,
            },
            alias,
            join,
            condition: None,
        })
    }

    fn identifier(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Word(w)) if !is_reserved(&w) => {
                self.pos += 1;
                Ok(w)
            }
            Some(TokenKind::QuotedIdent { text, .. }) => {
                self.pos += 1;
                Ok(text)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn order_item(&mut self) -> Result<OrderItem, ParseError> {
        let expr = self.expr()?;
        let direction = if self.eat_word("DESC") {
            Direction::Desc
        } else {
            self.eat_word("ASC");
            Direction::Asc
        };
        Ok(OrderItem { expr, direction })
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        self.expr_bp(0)
    }

    fn expr_bp(&mut self, min: u8) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.prefix()?;
        loop {
            let Some(step) = self.infix_step(min)? else {
                break;
            };
            lhs = step.apply(self, lhs)?;
        }
        self.leave();
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        if self.at_word("NOT") {
            if self.at_word_n(1, "EXISTS") {
                self.pos += 2;
                let subquery = self.paren_query()?;
                return Ok(Expr::Exists {
                    subquery: Box::new(subquery),
                    negated: true,
                });
            }
            self.pos += 1;
            let operand = self.expr_bp(NOT_PRECEDENCE + 1)?;
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                expr: Box::new(operand),
            });
        }
        for (sym, op) in [("-", UnaryOp::Neg), ("+", UnaryOp::Plus), ("~", UnaryOp::BitNot)] {
            if self.at_op(sym) {
                self.pos += 1;
                let operand = self.expr_bp(UNARY_PRECEDENCE)?;
                return Ok(Expr::Unary {
                    op,
                    expr: Box::new(operand),
                });
            }
        }
        self.primary()
    }

    fn paren_query(&mut self) -> Result<SqlAst, ParseError> {
        self.expect(&TokenKind::LParen)?;
        let q = self.query()?;
        self.expect(&TokenKind::RParen)?;
        Ok(q)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected("expression"));
        };
        match tok.kind {
            TokenKind::Number(n) => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::Number(n)))
            }
            TokenKind::Str(s) => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::String(s)))
            }
            TokenKind::LParen => {
                self.pos += 1;
                if self.at_word("SELECT") {
                    let q = self.query()?;
                    self.expect(&TokenKind::RParen)?;
                    return Ok(Expr::Subquery(Box::new(q)));
                }
                let e = self.expr()?;
                if self.at(&TokenKind::Comma) {
                    return Err(self.err(ParseErrorKind::Unsupported, "row values are not supported"));
                }
                self.expect(&TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::QuotedIdent { text, double } => {
                self.pos += 1;
                if self.at(&TokenKind::Dot) {
                    return self.qualified(text);
                }
                if double {
                    Ok(Expr::Literal(Literal::DoubleQuoted(text)))
                } else {
                    Ok(column(None, text))
                }
            }
            TokenKind::Word(w) => {
                if w.eq_ignore_ascii_case("NULL") {
                    self.pos += 1;
                    return Ok(Expr::Literal(Literal::Null));
                }
                if w.eq_ignore_ascii_case("CASE") {
                    self.pos += 1;
                    return self.case_expr();
                }
                if w.eq_ignore_ascii_case("CAST") {
                    self.pos += 1;
                    return self.cast_expr();
                }
                if w.eq_ignore_ascii_case("EXISTS") {
                    self.pos += 1;
                    let subquery = self.paren_query()?;
                    return Ok(Expr::Exists {
                        subquery: Box::new(subquery),
                        negated: false,
                    });
                }
                if is_reserved(&w) {
                    return Err(self.unexpected("expression"));
                }
                self.pos += 1;
                if self.at(&TokenKind::LParen) {
                    return self.function(w);
                }
                if self.at(&TokenKind::Dot) {
                    return self.qualified(w);
                }
                Ok(column(None, w))
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn qualified(&mut self, qualifier: String) -> Result<Expr, ParseError> {
        self.expect(&TokenKind::Dot)?;
        if self.at_op("*") {
            self.pos += 1;
            return Ok(Expr::Star {
                qualifier: Some(qualifier),
                source: None,
            });
        }
        let name = self.identifier("column name")?;
        if self.at(&TokenKind::Dot) {
            return Err(self.err(
                ParseErrorKind::Unsupported,
                "schema-qualified column names are not supported",
            ));
        }
        Ok(column(Some(qualifier), name))
    }

    fn function(&mut self, name: String) -> Result<Expr, ParseError> {
        self.expect(&TokenKind::LParen)?;
        if self.at_op("*") {
            self.pos += 1;
            self.expect(&TokenKind::RParen)?;
            return Ok(Expr::Function {
                name,
                distinct: false,
                args: FunctionArgs::Star,
            });
        }
        let distinct = self.eat_word("DISTINCT");
        let args = if self.at(&TokenKind::RParen) {
            Vec::new()
        } else {
            self.comma_list(|p| p.expr())?
        };
        self.expect(&TokenKind::RParen)?;
        Ok(Expr::Function {
            name,
            distinct,
            args: FunctionArgs::List(args),
        })
    }

    fn case_expr(&mut self) -> Result<Expr, ParseError> {
        let operand = if self.at_word("WHEN") {
            None
        } else {
            Some(Box::new(self.expr()?))
        };
        let mut branches = Vec::new();
        while self.eat_word("WHEN") {
            let when = self.expr()?;
            self.expect_word("THEN")?;
            let then = self.expr()?;
            branches.push(CaseBranch { when, then });
        }
        if branches.is_empty() {
            return Err(self.unexpected("WHEN"));
        }
        let else_result = if self.eat_word("ELSE") {
            Some(Box::new(self.expr()?))
        } else {
            None
        };
        self.expect_word("END")?;
        Ok(Expr::Case {
            operand,
            branches,
            else_result,
        })
    }

    fn cast_expr(&mut self) -> Result<Expr, ParseError> {
        self.expect(&TokenKind::LParen)?;
        let expr = self.expr()?;
        self.expect_word("AS")?;
        let mut words = Vec::new();
        while let Some(Token {
            kind: TokenKind::Word(w),
            ..
        }) = self.peek()
        {
            words.push(w.clone());
            self.pos += 1;
        }
        if words.is_empty() {
            return Err(self.unexpected("type name"));
        }
        let mut type_name = words.join(" ");
        if self.eat(&TokenKind::LParen) {
            let mut args = Vec::new();
            loop {
                match self.peek().map(|t| t.kind.clone()) {
                    Some(TokenKind::Number(n)) => {
                        self.pos += 1;
                        args.push(n);
                    }
                    _ => return Err(self.unexpected("type size")),
                }
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect(&TokenKind::RParen)?;
            type_name = format!("{type_name}({})", args.join(", "));
        }
        self.expect(&TokenKind::RParen)?;
        Ok(Expr::Cast {
            expr: Box::new(expr),
            type_name,
        })
    }

    /// Identifies the next infix/postfix operator binding at least as
    /// tightly as `min`, consuming nothing.
    fn infix_step(&self, min: u8) -> Result<Option<Infix>, ParseError> {
        let Some(tok) = self.peek() else {
            return Ok(None);
        };
        let step = match &tok.kind {
            TokenKind::Word(w) => {
                let w = w.to_ascii_uppercase();
                match w.as_str() {
                    "OR" => Infix::Binary(BinaryOp::Or),
                    "AND" => Infix::Binary(BinaryOp::And),
                    "IS" => Infix::Is,
                    "ISNULL" => Infix::NullTest(false, 1),
                    "NOTNULL" => Infix::NullTest(true, 1),
                    "IN" => Infix::In(false, 1),
                    "LIKE" => Infix::Pattern(PatternOp::Like, false, 1),
                    "GLOB" => Infix::Pattern(PatternOp::Glob, false, 1),
                    "BETWEEN" => Infix::Between(false, 1),
                    "COLLATE" => Infix::Collate,
                    "NOT" => {
                        let next = self.peek_at(1);
                        if next.is_some_and(|t| t.is_word("IN")) {
                            Infix::In(true, 2)
                        } else if next.is_some_and(|t| t.is_word("LIKE")) {
                            Infix::Pattern(PatternOp::Like, true, 2)
                        } else if next.is_some_and(|t| t.is_word("GLOB")) {
                            Infix::Pattern(PatternOp::Glob, true, 2)
                        } else if next.is_some_and(|t| t.is_word("BETWEEN")) {
                            Infix::Between(true, 2)
                        } else if next.is_some_and(|t| t.is_word("NULL")) {
                            Infix::NullTest(true, 2)
                        } else {
                            return Ok(None);
                        }
                    }
                    _ => return Ok(None),
                }
            }
            TokenKind::Op(op) => match *op {
                "=" | "==" => Infix::Binary(BinaryOp::Eq),
                "!=" | "<>" => Infix::Binary(BinaryOp::NotEq),
                "<" => Infix::Binary(BinaryOp::Lt),
                "<=" => Infix::Binary(BinaryOp::LtEq),
                ">" => Infix::Binary(BinaryOp::Gt),
                ">=" => Infix::Binary(BinaryOp::GtEq),
                "&" => Infix::Binary(BinaryOp::BitAnd),
                "|" => Infix::Binary(BinaryOp::BitOr),
                "<<" => Infix::Binary(BinaryOp::ShiftLeft),
                ">>" => Infix::Binary(BinaryOp::ShiftRight),
                "+" => Infix::Binary(BinaryOp::Add),
                "-" => Infix::Binary(BinaryOp::Sub),
                "*" => Infix::Binary(BinaryOp::Mul),
                "/" => Infix::Binary(BinaryOp::Div),
                "%" => Infix::Binary(BinaryOp::Mod),
                "||" => Infix::Binary(BinaryOp::Concat),
                _ => return Ok(None),
            },
            _ => return Ok(None),
        };
        let prec = step.precedence();
        if prec < min {
            return Ok(None);
        }
        Ok(Some(step))
    }
}

#[derive(Debug, Clone, Copy)]
enum Infix {
    Binary(BinaryOp),
    Is,
    /// Negation flag and the number of tokens the operator spans.
    NullTest(bool, usize),
    In(bool, usize),
    Pattern(PatternOp, bool, usize),
    Between(bool, usize),
    Collate,
}

impl Infix {
    fn precedence(self) -> u8 {
        match self {
            Infix::Binary(op) => op.precedence(),
            Infix::Is
            | Infix::NullTest(..)
            | Infix::In(..)
            | Infix::Pattern(..)
            | Infix::Between(..) => PREDICATE_PRECEDENCE,
            Infix::Collate => UNARY_PRECEDENCE,
        }
    }

    fn apply(self, p: &mut Parser, lhs: Expr) -> Result<Expr, ParseError> {
        let prec = self.precedence();
        match self {
            Infix::Binary(op) => {
                p.pos += 1;
                let rhs = p.expr_bp(prec + 1)?;
                Ok(Expr::Binary {
                    op,
                    left: Box::new(lhs),
                    right: Box::new(rhs),
                })
            }
            Infix::Is => {
                p.pos += 1;
                let negated = p.eat_word("NOT");
                if p.eat_word("NULL") {
                    return Ok(Expr::IsNull {
                        expr: Box::new(lhs),
                        negated,
                    });
                }
                let rhs = p.expr_bp(prec + 1)?;
                Ok(Expr::Binary {
                    op: if negated { BinaryOp::IsNot } else { BinaryOp::Is },
                    left: Box::new(lhs),
                    right: Box::new(rhs),
                })
            }
            Infix::NullTest(negated, len) => {
                p.pos += len;
                Ok(Expr::IsNull {
                    expr: Box::new(lhs),
                    negated,
                })
            }
            Infix::In(negated, len) => {
                p.pos += len;
                p.expect(&TokenKind::LParen)?;
                if p.at_word("SELECT") {
                    let q = p.query()?;
                    p.expect(&TokenKind::RParen)?;
                    return Ok(Expr::InSubquery {
                        expr: Box::new(lhs),
                        subquery: Box::new(q),
                        negated,
                    });
                }
                let list = if p.at(&TokenKind::RParen) {
                    Vec::new()
                } else {
                    p.comma_list(|p| p.expr())?
                };
                p.expect(&TokenKind::RParen)?;
                Ok(Expr::InList {
                    expr: Box::new(lhs),
                    list,
                    negated,
                })
            }
            Infix::Pattern(op, negated, len) => {
                p.pos += len;
                let pattern = p.expr_bp(prec + 1)?;
                if p.at_word("ESCAPE") {
                    return Err(p.err(ParseErrorKind::Unsupported, "LIKE ... ESCAPE is not supported"));
                }
                Ok(Expr::Pattern {
                    op,
                    expr: Box::new(lhs),
                    pattern: Box::new(pattern),
                    negated,
                })
            }
            Infix::Between(negated, len) => {
                p.pos += len;
                let low = p.expr_bp(prec + 1)?;
                p.expect_word("AND")?;
                let high = p.expr_bp(prec + 1)?;
                Ok(Expr::Between {
                    expr: Box::new(lhs),
                    low: Box::new(low),
                    high: Box::new(high),
                    negated,
                })
            }
            Infix::Collate => {
                p.pos += 1;
                let collation = p.identifier("collation name")?;
                Ok(Expr::Collate {
                    expr: Box::new(lhs),
                    collation,
                })
            }
        }
    }
}

fn column(qualifier: Option<String>, name: String) -> Expr {
    Expr::Column(ColumnRef {
        qualifier,
        name,
        binding: Binding::Unbound,
    })
}
