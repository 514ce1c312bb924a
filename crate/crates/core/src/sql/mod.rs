//! SQL front end: lexer, parser, binder, printer, canonical form and diff.

pub mod ast;
pub mod binder;
pub mod canonical;
pub mod diff;
mod error;
pub mod joins;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::*;
pub use binder::BindMode;
pub use canonical::{canonicalize, CanonicalAst};
pub use diff::{diff, AstDiff};
pub use error::{ParseError, ParseErrorKind};
pub use parser::parse_unbound;
pub use printer::{expr_to_sql, to_skeleton, to_sql};

use crate::schema::DatabaseSchema;

/// Parses and binds `sql`; unknown tables or columns are errors.
pub fn parse(sql: &str, schema: &DatabaseSchema) -> Result<SqlAst, ParseError> {
    let mut ast = parse_unbound(sql)?;
    binder::bind(&mut ast, schema, BindMode::Strict)?;
    Ok(ast)
}

/// Like [`parse`], but columns that do not resolve are kept as
/// [`Binding::Unresolved`] so the tree can still be compared.
pub fn parse_lenient(sql: &str, schema: &DatabaseSchema) -> Result<SqlAst, ParseError> {
    let mut ast = parse_unbound(sql)?;
    binder::bind(&mut ast, schema, BindMode::Lenient)?;
    Ok(ast)
}
