use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::lexer::{lex, Tok, Token};
use super::{Desugaring, InputDecl, InputSource, Sugar, SyntaxError};
use crate::builtin::Builtin;
use crate::expr::{name, AggKind, Aggregator, Case, Compat, Expr, Literal};
use crate::pattern::Pattern;
use crate::types::{sum_combine, TypeExpr};
use crate::value::{Bag, Value, F64};

const KEYWORDS: [&str; 20] = [
    "let",
    "in",
    "if",
    "then",
    "else",
    "flatmap",
    "reduce",
    "reduceByKey",
    "cogroup",
    "join",
    "groupBy",
    "mu",
    "aggregate",
    "distinct",
    "dist",
    "inf",
    "input",
    "file",
    "compatible",
    "fun",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s) || Builtin::from_ident(s).is_some()
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    trace: Vec<Desugaring>,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    pub fn new(src: &str) -> PResult<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            trace: Vec::new(),
        })
    }

    pub fn into_trace(self) -> Vec<Desugaring> {
        self.trace
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: &str) -> PResult<T> {
        let (l, c) = self.here();
        Err(SyntaxError::new(l, c, msg))
    }

    fn found(&self) -> String {
        match self.peek() {
            Tok::Int(i) => format!("`{i}`"),
            Tok::Float(f) => format!("`{f}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Ident(s) | Tok::Upper(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => String::from("end of input"),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&format!("expected `{s}`, found {}", self.found()))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.error(&format!("expected `{s}`, found {}", self.found()))
        }
    }

    pub fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error(&format!("unexpected {} after the end of the term", self.found()))
        }
    }

    fn note(&mut self, sugar: Sugar, at: (usize, usize)) {
        self.trace.push(Desugaring {
            sugar,
            line: at.0,
            col: at.1,
        });
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(&format!("expected an identifier, found {}", self.found())),
        }
    }

    pub fn program(&mut self) -> PResult<(Vec<InputDecl>, Expr)> {
        let mut inputs: Vec<InputDecl> = Vec::new();
        while self.is_kw("input") {
            self.bump();
            let at = self.here();
            let n = self.ident()?;
            if inputs.iter().any(|d| *d.name == *n) {
                return Err(SyntaxError::new(at.0, at.1, &format!("input `{n}` declared twice")));
            }
            self.expect_sym(":")?;
            let ty = self.ty()?;
            let source = if self.eat_sym("=") {
                if self.eat_kw("file") {
                    self.expect_sym("(")?;
                    let Tok::Str(path) = self.bump() else {
                        return self.error("expected a quoted file path");
                    };
                    self.expect_sym(")")?;
                    InputSource::File(path)
                } else {
                    InputSource::Inline(self.expr()?)
                }
            } else {
                InputSource::External
            };
            self.expect_sym(";")?;
            inputs.push(InputDecl {
                name: name(&n),
                ty,
                source,
            });
        }
        let body = self.expr()?;
        self.expect_eof()?;
        Ok((inputs, body))
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("let") {
            let x = self.ident()?;
            self.expect_sym("=")?;
            let bound = self.expr()?;
            self.expect_kw("in")?;
            let body = self.expr()?;
            return Ok(Expr::Let(name(&x), Box::new(bound), Box::new(body)));
        }
        if self.is_kw("if") {
            let at = self.here();
            self.bump();
            let c = self.expr()?;
            self.expect_kw("then")?;
            let a = self.expr()?;
            self.expect_kw("else")?;
            let b = self.expr()?;
            self.note(Sugar::IfThenElse, at);
            return Ok(Expr::if_then_else(c, a, b));
        }
        if self.eat_sym("\\") {
            let mut cases = alloc::vec![self.case()?];
            while self.eat_sym("|") {
                cases.push(self.case()?);
            }
            return Ok(Expr::lambda(cases));
        }
        self.binary(0)
    }

    fn case(&mut self) -> PResult<Case> {
        let at = self.here();
        let pattern = self.pattern()?;
        if let Some(v) = pattern.duplicate_var() {
            return Err(SyntaxError::new(
                at.0,
                at.1,
                &format!("pattern variable `{v}` occurs more than once"),
            ));
        }
        self.expect_sym("->")?;
        let body = self.expr()?;
        Ok(Case { pattern, body })
    }

    /// Precedence climbing over the infix builtins.
    fn binary(&mut self, level: usize) -> PResult<Expr> {
        const LEVELS: [&[(&str, Builtin)]; 5] = [
            &[("||", Builtin::Or)],
            &[("&&", Builtin::And)],
            &[
                ("==", Builtin::Eq),
                ("!=", Builtin::Neq),
                ("<=", Builtin::Le),
                (">=", Builtin::Ge),
                ("<", Builtin::Lt),
                (">", Builtin::Gt),
            ],
            &[("+", Builtin::Add), ("-", Builtin::Sub), ("++", Builtin::BagUnion)],
            &[("*", Builtin::Mul), ("/", Builtin::Div)],
        ];
        if level == LEVELS.len() {
            return self.application();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let at = self.here();
            let Some(op) = LEVELS[level].iter().find(|(s, _)| self.is_sym(s)).map(|(_, b)| *b) else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.binary(level + 1)?;
            self.note(Sugar::Infix, at);
            lhs = Expr::binop(op, lhs, rhs);
            // comparisons do not chain
            if level == 2 {
                return Ok(lhs);
            }
        }
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::Float(_) | Tok::Str(_) | Tok::Upper(_) => true,
            Tok::Ident(s) => !matches!(
                s.as_str(),
                "let" | "in" | "if" | "then" | "else" | "input" | "file" | "compatible"
            ),
            Tok::Sym(s) => matches!(*s, "(" | "{"),
            Tok::Eof => false,
        }
    }

    fn application(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        while self.starts_atom() {
            let a = self.atom()?;
            e = Expr::apply(e, a);
        }
        Ok(e)
    }

    fn args(&mut self, n: usize, what: &str) -> PResult<Vec<Expr>> {
        self.expect_sym("(")?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 && !self.eat_sym(",") {
                return self.error(&format!(
                    "{what} takes {n} arguments; expected `,`, found {}",
                    self.found()
                ));
            }
            out.push(self.expr()?);
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let at = self.here();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Lit(Literal::Int(i)))
            }
            Tok::Float(f) => {
                self.bump();
                Ok(Expr::Lit(Literal::Float(F64(f))))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Literal::Str(Arc::from(s.as_str()))))
            }
            Tok::Sym("-")
                if matches!(self.peek_at(1), Tok::Int(_) | Tok::Float(_))
                    || self.peek_at(1) == &Tok::Ident("inf".into()) =>
            {
                self.bump();
                Ok(match self.bump() {
                    Tok::Int(i) => Expr::Lit(Literal::Int(-i)),
                    Tok::Float(f) => Expr::Lit(Literal::Float(F64(-f))),
                    _ => Expr::Lit(Literal::Float(F64(f64::NEG_INFINITY))),
                })
            }
            Tok::Upper(c) => {
                self.bump();
                let mut args = Vec::new();
                if self.eat_sym("(") {
                    if !self.is_sym(")") {
                        args.push(self.expr()?);
                        while self.eat_sym(",") {
                            args.push(self.expr()?);
                        }
                    }
                    self.expect_sym(")")?;
                }
                Ok(Expr::Construct(name(&c), args))
            }
            Tok::Sym("(") => {
                self.bump();
                if let Tok::Sym(s) = self.peek().clone() {
                    if let Some(op) = section(s) {
                        if self.peek_at(1) == &Tok::Sym(")") {
                            self.bump();
                            self.bump();
                            return Ok(Expr::Builtin(op));
                        }
                    }
                }
                let first = self.expr()?;
                if self.eat_sym(")") {
                    return Ok(first);
                }
                let mut items = alloc::vec![first];
                while self.eat_sym(",") {
                    items.push(self.expr()?);
                }
                self.expect_sym(")")?;
                self.note(Sugar::Tuple, at);
                Ok(Expr::tuple(items))
            }
            Tok::Sym("{") => {
                self.bump();
                if self.eat_sym("}") {
                    return Ok(Expr::Empty);
                }
                let mut items = alloc::vec![self.expr()?];
                while self.eat_sym(",") {
                    items.push(self.expr()?);
                }
                self.expect_sym("}")?;
                if items.len() > 1 {
                    self.note(Sugar::BagLiteral, at);
                }
                let mut it = items.into_iter().map(Expr::singleton);
                let first = it.next().expect("nonempty");
                Ok(it.fold(first, |acc, s| Expr::binop(Builtin::BagUnion, acc, s)))
            }
            Tok::Ident(s) => self.keyword_or_var(&s, at),
            _ => self.error(&format!("expected an expression, found {}", self.found())),
        }
    }

    fn keyword_or_var(&mut self, s: &str, at: (usize, usize)) -> PResult<Expr> {
        if let Some(b) = Builtin::from_ident(s) {
            self.bump();
            return Ok(Expr::Builtin(b));
        }
        match s {
            "inf" => {
                self.bump();
                Ok(Expr::Lit(Literal::Float(F64(f64::INFINITY))))
            }
            "flatmap" | "cogroup" | "join" => {
                self.bump();
                let mut a = self.args(2, s)?;
                let (y, x) = (a.pop().unwrap(), a.pop().unwrap());
                Ok(match s {
                    "flatmap" => Expr::flatmap(x, y),
                    "cogroup" => Expr::cogroup(x, y),
                    _ => Expr::join(x, y),
                })
            }
            "reduce" => {
                self.bump();
                let mut a = self.args(3, s)?;
                let src = a.pop().unwrap();
                let zero = a.pop().unwrap();
                Ok(Expr::reduce(a.pop().unwrap(), zero, src))
            }
            "reduceByKey" => {
                self.bump();
                let mut a = self.args(2, s)?;
                let src = a.pop().unwrap();
                let op = a.pop().unwrap();
                let compat = self.compat()?;
                Ok(Expr::ReduceByKey {
                    op: Box::new(op),
                    src: Box::new(src),
                    compat,
                })
            }
            "groupBy" => {
                self.bump();
                let mut a = self.args(1, s)?;
                self.note(Sugar::GroupBy, at);
                Ok(group_by(a.pop().unwrap()))
            }
            "mu" => {
                self.bump();
                let delta = if self.eat_sym("[") {
                    let d = self.aggregator()?;
                    self.expect_sym("]")?;
                    d
                } else {
                    self.note(Sugar::DefaultDelta, at);
                    Aggregator::distinct()
                };
                let mut a = self.args(2, s)?;
                let phi = a.pop().unwrap();
                Ok(Expr::fixpoint(delta, a.pop().unwrap(), phi))
            }
            "aggregate" => {
                self.bump();
                self.expect_sym("[")?;
                let d = self.aggregator()?;
                self.expect_sym("]")?;
                let mut a = self.args(1, s)?;
                Ok(Expr::Aggregate(d, Box::new(a.pop().unwrap())))
            }
            "distinct" => {
                self.bump();
                let mut a = self.args(1, s)?;
                self.note(Sugar::Distinct, at);
                Ok(Expr::Aggregate(Aggregator::distinct(), Box::new(a.pop().unwrap())))
            }
            "dist" => {
                self.bump();
                let mut a = self.args(1, s)?;
                Ok(Expr::Dist(Box::new(a.pop().unwrap())))
            }
            _ => Ok(Expr::Var(name(&self.ident()?))),
        }
    }

    fn compat(&mut self) -> PResult<Compat> {
        if !self.eat_sym("@") {
            return Ok(Compat::none());
        }
        self.expect_kw("compatible")?;
        if !self.eat_sym("(") {
            return Ok(Compat::any());
        }
        let mut names = BTreeSet::new();
        loop {
            if self.eat_sym("*") {
                names.insert(name("*"));
            } else {
                names.insert(name(&self.ident()?));
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(Compat(names))
    }

    fn aggregator(&mut self) -> PResult<Aggregator> {
        let Tok::Ident(kw) = self.peek().clone() else {
            return self.error(&format!("expected an aggregation function, found {}", self.found()));
        };
        self.bump();
        let kind = match kw.as_str() {
            "distinct" => AggKind::Distinct,
            "identity" => AggKind::Identity,
            "minByKey" | "maxByKey" | "sumByKey" => {
                let op = match kw.as_str() {
                    "minByKey" => Builtin::Min,
                    "maxByKey" => Builtin::Max,
                    _ => Builtin::Add,
                };
                let pattern = if self.eat_sym("(") {
                    let p = self.pattern()?;
                    self.expect_sym(")")?;
                    p
                } else {
                    Aggregator::pair_pattern()
                };
                if pattern.vars().is_empty() {
                    return self.error("a by-key pattern needs a value variable");
                }
                AggKind::ByKey { op, pattern }
            }
            "byKey" => {
                self.expect_sym("(")?;
                let at = self.here();
                let op = match self.atom()? {
                    Expr::Builtin(b) if b.arity() == 2 => b,
                    _ => return Err(SyntaxError::new(at.0, at.1, "byKey expects a binary builtin")),
                };
                let pattern = if self.eat_sym(",") {
                    self.pattern()?
                } else {
                    Aggregator::pair_pattern()
                };
                self.expect_sym(")")?;
                if pattern.vars().is_empty() {
                    return self.error("a by-key pattern needs a value variable");
                }
                AggKind::ByKey { op, pattern }
            }
            "filter" => {
                self.expect_sym("(")?;
                let pattern = self.pattern()?;
                self.expect_sym(",")?;
                let var = self.ident()?;
                if !pattern.binds(&var) {
                    return self.error(&format!("`{var}` does not occur in the filter pattern"));
                }
                self.expect_sym(",")?;
                let predicate = self.expr()?;
                self.expect_sym(")")?;
                AggKind::Filter {
                    pattern,
                    var: name(&var),
                    predicate: Box::new(predicate),
                }
            }
            other => return self.error(&format!("unknown aggregation function `{other}`")),
        };
        let compatible_with = self.compat()?;
        Ok(Aggregator { kind, compatible_with })
    }

    pub fn pattern(&mut self) -> PResult<Pattern> {
        match self.peek().clone() {
            Tok::Ident(_) => Ok(Pattern::Var(name(&self.ident()?))),
            Tok::Upper(c) => {
                self.bump();
                let mut args = Vec::new();
                if self.eat_sym("(") {
                    if !self.is_sym(")") {
                        args.push(self.pattern()?);
                        while self.eat_sym(",") {
                            args.push(self.pattern()?);
                        }
                    }
                    self.expect_sym(")")?;
                }
                Ok(Pattern::Ctor(name(&c), args))
            }
            Tok::Sym("(") => {
                self.bump();
                let first = self.pattern()?;
                if self.eat_sym(")") {
                    return Ok(first);
                }
                let mut items = alloc::vec![first];
                while self.eat_sym(",") {
                    items.push(self.pattern()?);
                }
                self.expect_sym(")")?;
                Ok(Pattern::tuple(items))
            }
            _ => self.error(&format!("expected a pattern, found {}", self.found())),
        }
    }

    pub fn ty(&mut self) -> PResult<TypeExpr> {
        let t = self.sum_ty()?;
        if self.eat_sym("->") {
            let r = self.ty()?;
            return Ok(TypeExpr::func(t, r));
        }
        Ok(t)
    }

    fn sum_ty(&mut self) -> PResult<TypeExpr> {
        let mut t = self.base_ty()?;
        while self.is_sym("|") {
            self.bump();
            let at = self.here();
            let u = self.base_ty()?;
            t = sum_combine(&t, &u).map_err(|e| SyntaxError::new(at.0, at.1, &e.to_string()))?;
        }
        Ok(t)
    }

    fn base_ty(&mut self) -> PResult<TypeExpr> {
        match self.peek().clone() {
            Tok::Upper(n) => {
                self.bump();
                match n.as_str() {
                    "Int" => Ok(TypeExpr::int()),
                    "Float" => Ok(TypeExpr::float()),
                    "String" => Ok(TypeExpr::string()),
                    "Bool" => Ok(TypeExpr::bool()),
                    "Void" => Ok(TypeExpr::void()),
                    "Bag_l" | "Bag_d" => {
                        self.expect_sym("<")?;
                        let at = self.here();
                        let inner = self.ty()?;
                        self.expect_sym(">")?;
                        let t = if n == "Bag_l" {
                            TypeExpr::local(inner)
                        } else {
                            TypeExpr::dist(inner)
                        };
                        if !t.well_formed() {
                            return Err(SyntaxError::new(at.0, at.1, "distributed bags cannot be nested"));
                        }
                        Ok(t)
                    }
                    _ => {
                        let mut params = Vec::new();
                        if self.eat_sym("(") {
                            if !self.is_sym(")") {
                                params.push(self.ty()?);
                                while self.eat_sym(",") {
                                    params.push(self.ty()?);
                                }
                            }
                            self.expect_sym(")")?;
                        }
                        Ok(TypeExpr::ctor(&n, params))
                    }
                }
            }
            Tok::Sym("(") => {
                self.bump();
                let first = self.ty()?;
                if self.eat_sym(")") {
                    return Ok(first);
                }
                let mut items = alloc::vec![first];
                while self.eat_sym(",") {
                    items.push(self.ty()?);
                }
                self.expect_sym(")")?;
                Ok(TypeExpr::tuple(items))
            }
            _ => self.error(&format!("expected a type, found {}", self.found())),
        }
    }

    pub fn value(&mut self) -> PResult<Value> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Value::Int(i))
            }
            Tok::Float(f) => {
                self.bump();
                Ok(Value::float(f))
            }
            Tok::Ident(s) if s == "inf" => {
                self.bump();
                Ok(Value::float(f64::INFINITY))
            }
            Tok::Sym("-") => {
                self.bump();
                match self.bump() {
                    Tok::Int(i) => Ok(Value::Int(-i)),
                    Tok::Float(f) => Ok(Value::float(-f)),
                    Tok::Ident(s) if s == "inf" => Ok(Value::float(f64::NEG_INFINITY)),
                    _ => self.error("expected a number after `-`"),
                }
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Value::str(&s))
            }
            Tok::Upper(c) => {
                self.bump();
                let mut args = Vec::new();
                if self.eat_sym("(") {
                    if !self.is_sym(")") {
                        args.push(self.value()?);
                        while self.eat_sym(",") {
                            args.push(self.value()?);
                        }
                    }
                    self.expect_sym(")")?;
                }
                Ok(Value::constructed(&c, args))
            }
            Tok::Sym("(") => {
                self.bump();
                let first = self.value()?;
                if self.eat_sym(")") {
                    return Ok(first);
                }
                let mut items = alloc::vec![first];
                while self.eat_sym(",") {
                    items.push(self.value()?);
                }
                self.expect_sym(")")?;
                Ok(Value::tuple(items))
            }
            Tok::Sym("{") => {
                self.bump();
                let mut b = Bag::new();
                if !self.is_sym("}") {
                    b.insert(self.value()?);
                    while self.eat_sym(",") {
                        b.insert(self.value()?);
                    }
                }
                self.expect_sym("}")?;
                Ok(Value::Bag(b))
            }
            _ => self.error(&format!("expected a value, found {}", self.found())),
        }
    }
}

fn section(s: &str) -> Option<Builtin> {
    crate::builtin::ALL
        .iter()
        .copied()
        .find(|b| b.is_infix() && b.symbol() == s)
}

/// `reduceByKey(++, flatmap(\(k, v) -> {(k, {v})}, e))`.
pub fn group_by(e: Expr) -> Expr {
    let kv = Pattern::tuple(alloc::vec![Pattern::var("k"), Pattern::var("v")]);
    let body = Expr::singleton(Expr::tuple(alloc::vec![
        Expr::var("k"),
        Expr::singleton(Expr::var("v")),
    ]));
    Expr::reduce_by_key(Expr::Builtin(Builtin::BagUnion), Expr::flatmap(Expr::lam1(kv, body), e))
}
