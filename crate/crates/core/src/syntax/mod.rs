//! Surface syntax: lexer, parser with desugaring, and a printer whose
//! output parses back to the same core term.
//!
//! ```text
//! input R : Bag_d<(Int, Int)>;
//! let swap = \(a, b) -> {(b, a)} in
//! mu[distinct](R, \X -> flatmap(swap, X))
//! ```

mod lexer;
mod parser;
mod printer;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::Expr;
use crate::pattern::Pattern;
use crate::types::{TypeEnv, TypeExpr};
use crate::value::{Name, Value};

pub use printer::{pretty, print_aggregator, print_expr, print_pattern};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl SyntaxError {
    pub(crate) fn new(line: usize, col: usize, message: &str) -> Self {
        SyntaxError {
            line,
            col,
            message: String::from(message),
        }
    }
}

/// A piece of sugar expanded while parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sugar {
    /// `(a, b)` to `Tuple(a, b)`.
    Tuple,
    /// `if c then a else b` to a match on `True | False`.
    IfThenElse,
    /// `groupBy(e)` to `reduceByKey(++, flatmap(\(k, v) -> {(k, {v})}, e))`.
    GroupBy,
    /// `a + b` to `(+) a b`.
    Infix,
    /// `{a, b}` to `{a} ++ {b}`.
    BagLiteral,
    /// `distinct(e)` to the distinct aggregation.
    Distinct,
    /// `mu(R, f)` to `mu[distinct](R, f)`.
    DefaultDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Desugaring {
    pub sugar: Sugar,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// Supplied by the caller.
    External,
    /// `= file("path")`.
    File(String),
    /// `= expr`.
    Inline(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputDecl {
    pub name: Name,
    pub ty: TypeExpr,
    pub source: InputSource,
}

/// A parsed program: typed inputs followed by one expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub source: String,
    pub inputs: Vec<InputDecl>,
    pub body: Expr,
    pub desugared: Vec<Desugaring>,
}

impl Program {
    pub fn input_types(&self) -> TypeEnv {
        TypeEnv(self.inputs.iter().map(|d| (d.name.clone(), d.ty.clone())).collect())
    }
}

pub fn parse_program(src: &str) -> Result<Program, SyntaxError> {
    let mut p = parser::Parser::new(src)?;
    let (inputs, body) = p.program()?;
    Ok(Program {
        source: String::from(src),
        inputs,
        body,
        desugared: p.into_trace(),
    })
}

pub fn parse_expr(src: &str) -> Result<Expr, SyntaxError> {
    let mut p = parser::Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_type(src: &str) -> Result<TypeExpr, SyntaxError> {
    let mut p = parser::Parser::new(src)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_pattern(src: &str) -> Result<Pattern, SyntaxError> {
    let mut p = parser::Parser::new(src)?;
    let pat = p.pattern()?;
    p.expect_eof()?;
    Ok(pat)
}

/// Parses the canonical value encoding (`Tuple(1,2)`, `{1, 1, 2}`, `True`,
/// `"text"`); `(a, b)` is accepted for tuples.
pub fn parse_value(src: &str) -> Result<Value, SyntaxError> {
    let mut p = parser::Parser::new(src)?;
    let v = p.value()?;
    p.expect_eof()?;
    Ok(v)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(self))
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(self))
    }
}

impl fmt::Debug for crate::expr::Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", print_pattern(&self.pattern), print_expr(&self.body))
    }
}
