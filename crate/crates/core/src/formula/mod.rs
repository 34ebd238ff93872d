//! The field-reference formula language.
//!
//! Formulas name fields instead of cell positions. `Total` denotes the
//! `Total` field of the formula's own table, scoped by the row hierarchy;
//! `Sales!Total` denotes a field of another table, scoped by the declared
//! borrows and links. Names that are not plain identifiers are bracketed:
//! `[Sales Code]`, `Sales![Sales Code]`.
//!
//! The grammar is normative; see `docs/formula-grammar.md` in the
//! repository root.
//!
//! ```text
//! formula    = [ "=" ] comparison ;
//! comparison = additive [ cmp-op additive ] ;
//! additive   = multiplicative { ( "+" | "-" ) multiplicative } ;
//! multiplicative = unary { ( "*" | "/" ) unary } ;
//! unary      = "-" unary | power ;
//! power      = primary [ "^" unary ] ;
//! primary    = number | string | "TRUE" | "FALSE" | reference | call
//!            | "(" comparison ")" ;
//! ```

mod ast;
mod lexer;
mod parser;
mod printer;

use std::fmt;

pub use ast::{BinaryOp, Expr, Function, Reference, UnaryOp};

/// A formula that failed to lex or parse.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    /// Character offset into the original formula text (including any
    /// leading `=`).
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#PARSE at {}: {}", self.position, self.message)
    }
}

/// Parses formula text. A single leading `=` is accepted and ignored.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let leading_ws = text.chars().take_while(|c| c.is_whitespace()).count();
    let trimmed: String = text.chars().skip(leading_ws).collect();
    let (body, offset) = match trimmed.strip_prefix('=') {
        Some(rest) => (rest.to_owned(), leading_ws + 1),
        None => (trimmed, leading_ws),
    };
    let tokens = lexer::tokenize(&body, offset)?;
    parser::Parser::new(tokens).parse_formula()
}

/// Canonical text for `expr`, without the leading `=`. Parentheses appear
/// only where precedence requires them.
pub fn print(expr: &Expr) -> String {
    let mut out = String::new();
    printer::write_expr(expr, &mut out);
    out
}

/// Bracket-quotes a table or field name when it is not a plain identifier.
pub fn quote_name(name: &str) -> String {
    printer::quote_name(name)
}

/// Every field reference in `expr`, left to right, one entry per occurrence.
pub fn collect_refs(expr: &Expr) -> Vec<Reference> {
    let mut refs = Vec::new();
    walk_refs(expr, &mut refs);
    refs
}

fn walk_refs(expr: &Expr, out: &mut Vec<Reference>) {
    match expr {
        Expr::Ref(r) => out.push(r.clone()),
        Expr::Unary(_, inner) => walk_refs(inner, out),
        Expr::Binary(_, lhs, rhs) => {
            walk_refs(lhs, out);
            walk_refs(rhs, out);
        }
        Expr::Call(_, args) => args.iter().for_each(|a| walk_refs(a, out)),
        Expr::Number(_) | Expr::Text(_) | Expr::Bool(_) => {}
    }
}

/// Parses `Table!Field` (either side optionally bracketed) as used by
/// borrow and link declarations.
pub fn parse_field_path(text: &str) -> Result<(String, String), ParseError> {
    match parse(text)? {
        Expr::Ref(Reference::Cross { table, field }) => Ok((table, field)),
        _ => Err(ParseError {
            position: 0,
            message: format!("expected `Table!Field`, got `{text}`"),
        }),
    }
}
