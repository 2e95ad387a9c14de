//! The algebra's expression tree.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::builtin::Builtin;
use crate::pattern::Pattern;
use crate::value::{Name, Value, F64, TUPLE};

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Literal {
    Int(i64),
    Float(F64),
    Str(Arc<str>),
}

impl Literal {
    pub fn to_value(&self) -> Value {
        match self {
            Literal::Int(i) => Value::Int(*i),
            Literal::Float(f) => Value::Float(*f),
            Literal::Str(s) => Value::Str(s.clone()),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Case {
    pub pattern: Pattern,
    pub body: Expr,
}

/// The set of φ names an aggregation is declared compatible with. `*`
/// stands for every φ.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Compat(pub BTreeSet<Name>);

impl Compat {
    pub fn none() -> Self {
        Compat::default()
    }

    pub fn any() -> Self {
        Compat(core::iter::once(name("*")).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether the annotation covers the given φ. Anonymous φ terms are only
    /// covered by `*`.
    pub fn covers(&self, phi: &Expr) -> bool {
        if self.0.contains("*") {
            return true;
        }
        match phi {
            Expr::Var(n) => self.0.contains(n),
            _ => false,
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum AggKind {
    Identity,
    Distinct,
    /// Folds, with `op`, the component bound by the last variable of
    /// `pattern` across elements that agree everywhere else.
    ByKey {
        op: Builtin,
        pattern: Pattern,
    },
    /// Keeps the elements whose `var` component satisfies `predicate`, an
    /// expression in which `var` is free.
    Filter {
        pattern: Pattern,
        var: Name,
        predicate: Box<Expr>,
    },
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Aggregator {
    pub kind: AggKind,
    pub compatible_with: Compat,
}

impl Aggregator {
    pub fn distinct() -> Self {
        Aggregator {
            kind: AggKind::Distinct,
            compatible_with: Compat::none(),
        }
    }

    pub fn identity() -> Self {
        Aggregator {
            kind: AggKind::Identity,
            compatible_with: Compat::none(),
        }
    }

    pub fn by_key(op: Builtin, pattern: Pattern) -> Self {
        Aggregator {
            kind: AggKind::ByKey { op, pattern },
            compatible_with: Compat::none(),
        }
    }

    /// `(k, v)`, the default by-key layout.
    pub fn pair_pattern() -> Pattern {
        Pattern::tuple(alloc::vec![Pattern::var("k"), Pattern::var("v")])
    }

    pub fn with_compat(mut self, compat: Compat) -> Self {
        self.compatible_with = compat;
        self
    }

    pub fn is_distinct(&self) -> bool {
        matches!(self.kind, AggKind::Distinct)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, AggKind::Identity)
    }

    /// Short name used in traces and reports.
    pub fn label(&self) -> &'static str {
        match &self.kind {
            AggKind::Identity => "identity",
            AggKind::Distinct => "distinct",
            AggKind::ByKey { op: Builtin::Min, .. } => "minByKey",
            AggKind::ByKey { op: Builtin::Max, .. } => "maxByKey",
            AggKind::ByKey { op: Builtin::Add, .. } => "sumByKey",
            AggKind::ByKey { .. } => "byKey",
            AggKind::Filter { .. } => "filter",
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Lit(Literal),
    Builtin(Builtin),
    Var(Name),
    /// The empty bag `{}`.
    Empty,
    Singleton(Box<Expr>),
    Lambda(Arc<[Case]>),
    Apply(Box<Expr>, Box<Expr>),
    Construct(Name, Vec<Expr>),
    Flatmap(Box<Expr>, Box<Expr>),
    Reduce {
        op: Box<Expr>,
        zero: Box<Expr>,
        src: Box<Expr>,
    },
    ReduceByKey {
        op: Box<Expr>,
        src: Box<Expr>,
        compat: Compat,
    },
    Cogroup(Box<Expr>, Box<Expr>),
    Join(Box<Expr>, Box<Expr>),
    Fixpoint {
        delta: Aggregator,
        seed: Box<Expr>,
        phi: Box<Expr>,
    },
    /// Applies an aggregation function to a bag.
    Aggregate(Aggregator, Box<Expr>),
    /// Marks a local bag as distributed.
    Dist(Box<Expr>),
    Let(Name, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(n: &str) -> Expr {
        Expr::Var(name(n))
    }

    pub fn int(i: i64) -> Expr {
        Expr::Lit(Literal::Int(i))
    }

    pub fn str(s: &str) -> Expr {
        Expr::Lit(Literal::Str(Arc::from(s)))
    }

    pub fn lambda(cases: Vec<Case>) -> Expr {
        assert!(!cases.is_empty(), "lambda needs at least one case");
        Expr::Lambda(Arc::from(cases))
    }

    pub fn lam1(pattern: Pattern, body: Expr) -> Expr {
        Expr::lambda(alloc::vec![Case { pattern, body }])
    }

    pub fn apply(f: Expr, a: Expr) -> Expr {
        Expr::Apply(Box::new(f), Box::new(a))
    }

    pub fn apply2(f: Expr, a: Expr, b: Expr) -> Expr {
        Expr::apply(Expr::apply(f, a), b)
    }

    pub fn binop(op: Builtin, a: Expr, b: Expr) -> Expr {
        Expr::apply2(Expr::Builtin(op), a, b)
    }

    pub fn tuple(args: Vec<Expr>) -> Expr {
        Expr::Construct(name(TUPLE), args)
    }

    pub fn ctor(n: &str, args: Vec<Expr>) -> Expr {
        Expr::Construct(name(n), args)
    }

    pub fn bool(b: bool) -> Expr {
        Expr::ctor(if b { "True" } else { "False" }, Vec::new())
    }

    pub fn singleton(e: Expr) -> Expr {
        Expr::Singleton(Box::new(e))
    }

    pub fn flatmap(f: Expr, src: Expr) -> Expr {
        Expr::Flatmap(Box::new(f), Box::new(src))
    }

    pub fn join(a: Expr, b: Expr) -> Expr {
        Expr::Join(Box::new(a), Box::new(b))
    }

    pub fn cogroup(a: Expr, b: Expr) -> Expr {
        Expr::Cogroup(Box::new(a), Box::new(b))
    }

    pub fn reduce(op: Expr, zero: Expr, src: Expr) -> Expr {
        Expr::Reduce {
            op: Box::new(op),
            zero: Box::new(zero),
            src: Box::new(src),
        }
    }

    pub fn reduce_by_key(op: Expr, src: Expr) -> Expr {
        Expr::ReduceByKey {
            op: Box::new(op),
            src: Box::new(src),
            compat: Compat::none(),
        }
    }

    pub fn fixpoint(delta: Aggregator, seed: Expr, phi: Expr) -> Expr {
        Expr::Fixpoint {
            delta,
            seed: Box::new(seed),
            phi: Box::new(phi),
        }
    }

    pub fn let_in(n: &str, bound: Expr, body: Expr) -> Expr {
        Expr::Let(name(n), Box::new(bound), Box::new(body))
    }

    /// `if c then a else b`, i.e. a two-case match on the booleans.
    pub fn if_then_else(c: Expr, a: Expr, b: Expr) -> Expr {
        Expr::apply(
            Expr::lambda(alloc::vec![
                Case {
                    pattern: Pattern::ctor("True", Vec::new()),
                    body: a,
                },
                Case {
                    pattern: Pattern::ctor("False", Vec::new()),
                    body: b,
                },
            ]),
            c,
        )
    }

    /// Recognizes the `if` desugaring, returning `(cond, then, else)`.
    pub fn as_if(&self) -> Option<(&Expr, &Expr, &Expr)> {
        let Expr::Apply(f, c) = self else { return None };
        let Expr::Lambda(cases) = &**f else { return None };
        match &cases[..] {
            [t, e] if is_nullary(&t.pattern, "True") && is_nullary(&e.pattern, "False") => Some((c, &t.body, &e.body)),
            _ => None,
        }
    }

    /// The expression that rebuilds the value matched by a pattern.
    pub fn from_pattern(p: &Pattern) -> Expr {
        match p {
            Pattern::Var(v) => Expr::Var(v.clone()),
            Pattern::Ctor(n, args) => Expr::Construct(n.clone(), args.iter().map(Expr::from_pattern).collect()),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    pub fn mentions(&self, x: &str) -> bool {
        self.free_vars().contains(x)
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Expr::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Expr::Lambda(cases) => {
                for c in cases.iter() {
                    let vars = c.pattern.vars();
                    let n = vars.len();
                    bound.extend(vars);
                    c.body.collect_free(bound, out);
                    bound.truncate(bound.len() - n);
                }
            }
            Expr::Let(x, b, body) => {
                b.collect_free(bound, out);
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            _ => {
                if let Some(agg) = self.aggregator() {
                    agg_free(agg, bound, out);
                }
                for c in self.children() {
                    c.collect_free(bound, out);
                }
            }
        }
    }

    pub fn aggregator(&self) -> Option<&Aggregator> {
        match self {
            Expr::Fixpoint { delta, .. } => Some(delta),
            Expr::Aggregate(d, _) => Some(d),
            _ => None,
        }
    }

    /// Direct subexpressions, excluding lambda bodies' binders and
    /// aggregator predicates.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Lit(_) | Expr::Builtin(_) | Expr::Var(_) | Expr::Empty => Vec::new(),
            Expr::Singleton(e) | Expr::Aggregate(_, e) | Expr::Dist(e) => alloc::vec![&**e],
            Expr::Lambda(cases) => cases.iter().map(|c| &c.body).collect(),
            Expr::Apply(a, b) | Expr::Flatmap(a, b) | Expr::Cogroup(a, b) | Expr::Join(a, b) | Expr::Let(_, a, b) => {
                alloc::vec![&**a, &**b]
            }
            Expr::Construct(_, args) => args.iter().collect(),
            Expr::Reduce { op, zero, src } => alloc::vec![&**op, &**zero, &**src],
            Expr::ReduceByKey { op, src, .. } => alloc::vec![&**op, &**src],
            Expr::Fixpoint { seed, phi, .. } => alloc::vec![&**seed, &**phi],
        }
    }

    /// Rebuilds the node with every direct child transformed by `f`.
    /// Lambda bodies are included; binders are left untouched.
    pub fn map_children(&self, f: &mut dyn FnMut(&Expr) -> Expr) -> Expr {
        let b = |e: &Expr, f: &mut dyn FnMut(&Expr) -> Expr| Box::new(f(e));
        match self {
            Expr::Lit(_) | Expr::Builtin(_) | Expr::Var(_) | Expr::Empty => self.clone(),
            Expr::Singleton(e) => Expr::Singleton(b(e, f)),
            Expr::Aggregate(d, e) => Expr::Aggregate(d.clone(), b(e, f)),
            Expr::Dist(e) => Expr::Dist(b(e, f)),
            Expr::Lambda(cases) => Expr::Lambda(
                cases
                    .iter()
                    .map(|c| Case {
                        pattern: c.pattern.clone(),
                        body: f(&c.body),
                    })
                    .collect(),
            ),
            Expr::Apply(x, y) => Expr::Apply(b(x, f), b(y, f)),
            Expr::Flatmap(x, y) => Expr::Flatmap(b(x, f), b(y, f)),
            Expr::Cogroup(x, y) => Expr::Cogroup(b(x, f), b(y, f)),
            Expr::Join(x, y) => Expr::Join(b(x, f), b(y, f)),
            Expr::Let(n, x, y) => Expr::Let(n.clone(), b(x, f), b(y, f)),
            Expr::Construct(n, args) => Expr::Construct(n.clone(), args.iter().map(&mut *f).collect()),
            Expr::Reduce { op, zero, src } => Expr::Reduce {
                op: b(op, f),
                zero: b(zero, f),
                src: b(src, f),
            },
            Expr::ReduceByKey { op, src, compat } => Expr::ReduceByKey {
                op: b(op, f),
                src: b(src, f),
                compat: compat.clone(),
            },
            Expr::Fixpoint { delta, seed, phi } => Expr::Fixpoint {
                delta: delta.clone(),
                seed: b(seed, f),
                phi: b(phi, f),
            },
        }
    }

    /// Capture-avoiding substitution of `x` by `by`.
    pub fn subst(&self, x: &str, by: &Expr) -> Expr {
        let fv = by.free_vars();
        self.subst_with(x, by, &fv)
    }

    fn subst_with(&self, x: &str, by: &Expr, fv: &BTreeSet<Name>) -> Expr {
        match self {
            Expr::Var(v) if &**v == x => by.clone(),
            Expr::Lambda(cases) => Expr::Lambda(
                cases
                    .iter()
                    .map(|c| {
                        if c.pattern.binds(x) {
                            return c.clone();
                        }
                        let mut pattern = c.pattern.clone();
                        let mut body = c.body.clone();
                        for v in c.pattern.vars() {
                            if fv.contains(&v) {
                                let fresh = fresh_name(&v, &[&body, by]);
                                pattern = rename_pattern(&pattern, &v, &fresh);
                                body = body.subst(&v, &Expr::Var(fresh));
                            }
                        }
                        Case {
                            pattern,
                            body: body.subst_with(x, by, fv),
                        }
                    })
                    .collect(),
            ),
            Expr::Let(n, bound, body) => {
                let bound = bound.subst_with(x, by, fv);
                if &**n == x {
                    return Expr::Let(n.clone(), Box::new(bound), body.clone());
                }
                let (n, body) = if fv.contains(n) {
                    let fresh = fresh_name(n, &[body, by]);
                    let renamed = body.subst(n, &Expr::Var(fresh.clone()));
                    (fresh, renamed)
                } else {
                    (n.clone(), (**body).clone())
                };
                Expr::Let(n, Box::new(bound), Box::new(body.subst_with(x, by, fv)))
            }
            Expr::Fixpoint { delta, seed, phi } => Expr::Fixpoint {
                delta: subst_agg(delta, x, by),
                seed: Box::new(seed.subst_with(x, by, fv)),
                phi: Box::new(phi.subst_with(x, by, fv)),
            },
            Expr::Aggregate(d, e) => Expr::Aggregate(subst_agg(d, x, by), Box::new(e.subst_with(x, by, fv))),
            _ => self.map_children(&mut |c| c.subst_with(x, by, fv)),
        }
    }

    /// Visits every node in preorder, including lambda bodies.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Expr)) {
        visit(self);
        for c in self.children() {
            c.walk(visit);
        }
    }

    /// Number of nodes, for diagnostics and generators.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

fn is_nullary(p: &Pattern, ctor: &str) -> bool {
    matches!(p, Pattern::Ctor(n, args) if &**n == ctor && args.is_empty())
}

fn agg_free(agg: &Aggregator, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    if let AggKind::Filter { var, predicate, .. } = &agg.kind {
        bound.push(var.clone());
        predicate.collect_free(bound, out);
        bound.pop();
    }
}

fn subst_agg(agg: &Aggregator, x: &str, by: &Expr) -> Aggregator {
    let AggKind::Filter {
        pattern,
        var,
        predicate,
    } = &agg.kind
    else {
        return agg.clone();
    };
    if &**var == x {
        return agg.clone();
    }
    let (pattern, var, predicate) = if by.free_vars().contains(var) {
        let fresh = fresh_name(var, &[predicate, by]);
        (
            rename_pattern(pattern, var, &fresh),
            fresh.clone(),
            predicate.subst(var, &Expr::Var(fresh)),
        )
    } else {
        (pattern.clone(), var.clone(), (**predicate).clone())
    };
    Aggregator {
        kind: AggKind::Filter {
            pattern,
            var,
            predicate: Box::new(predicate.subst(x, by)),
        },
        compatible_with: agg.compatible_with.clone(),
    }
}

pub fn rename_pattern(p: &Pattern, from: &str, to: &Name) -> Pattern {
    match p {
        Pattern::Var(v) if &**v == from => Pattern::Var(to.clone()),
        Pattern::Var(_) => p.clone(),
        Pattern::Ctor(n, args) => Pattern::Ctor(n.clone(), args.iter().map(|a| rename_pattern(a, from, to)).collect()),
    }
}

/// A variant of `base` not free in any of `avoid`.
pub fn fresh_name(base: &str, avoid: &[&Expr]) -> Name {
    let taken: BTreeSet<Name> = avoid.iter().flat_map(|e| all_names(e)).collect();
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '_');
    (1..)
        .map(|i| name(&format!("{stem}_{i}")))
        .find(|n| !taken.contains(n))
        .expect("unbounded supply")
}

/// Every variable name occurring anywhere, bound or free.
fn all_names(e: &Expr) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    e.walk(&mut |n| match n {
        Expr::Var(v) | Expr::Let(v, _, _) => {
            out.insert(v.clone());
        }
        Expr::Lambda(cases) => out.extend(cases.iter().flat_map(|c| c.pattern.vars())),
        _ => {}
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn free_vars_respect_binders() {
        let e = Expr::lam1(
            Pattern::tuple(vec![Pattern::var("a"), Pattern::var("b")]),
            Expr::singleton(Expr::tuple(vec![Expr::var("b"), Expr::var("c")])),
        );
        assert_eq!(e.free_vars().into_iter().collect::<Vec<_>>(), vec![name("c")]);
    }

    #[test]
    fn substitution_avoids_capture() {
        // (\a -> x) [x := a]  must not bind the substituted a
        let e = Expr::lam1(Pattern::var("a"), Expr::var("x"));
        let r = e.subst("x", &Expr::var("a"));
        let Expr::Lambda(cases) = &r else { panic!() };
        assert_ne!(cases[0].pattern, Pattern::var("a"));
        assert_eq!(cases[0].body, Expr::var("a"));
        assert!(r.free_vars().contains("a"));
    }

    #[test]
    fn if_round_trips_through_recognizer() {
        let e = Expr::if_then_else(Expr::var("c"), Expr::int(1), Expr::int(0));
        let (c, t, f) = e.as_if().unwrap();
        assert_eq!((c, t, f), (&Expr::var("c"), &Expr::int(1), &Expr::int(0)));
    }

    #[test]
    fn compat_matches_by_name() {
        let c = Compat(core::iter::once(name("tc")).collect());
        assert!(c.covers(&Expr::var("tc")));
        assert!(!c.covers(&Expr::var("sp")));
        assert!(Compat::any().covers(&Expr::Empty));
    }
}
