//! Bidirectional type checking.
//!
//! Lambda parameter types are never guessed: operators and application
//! sites push the argument type into the lambda, and a let-bound lambda is
//! re-checked at every use against the type it is used at.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::builtin::Builtin;
use crate::expr::{AggKind, Aggregator, Case, Expr, Literal};
use crate::pattern::Pattern;
use crate::types::{closed_pattern_type, match_type, subtype, sum_combine, TypeEnv, TypeExpr, TypeMismatch};
use crate::value::Name;

/// The typing rule a rejected term violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeRule {
    Literal,
    Var,
    Builtin,
    Singleton,
    Construct,
    Lambda,
    Pattern,
    Apply,
    Flatmap,
    Reduce,
    ReduceByKey,
    Cogroup,
    Join,
    Fixpoint,
    Aggregate,
    Dist,
    Let,
}

impl TypeRule {
    pub fn name(self) -> &'static str {
        match self {
            TypeRule::Literal => "literal",
            TypeRule::Var => "var",
            TypeRule::Builtin => "builtin",
            TypeRule::Singleton => "singleton",
            TypeRule::Construct => "construct",
            TypeRule::Lambda => "lambda",
            TypeRule::Pattern => "pattern",
            TypeRule::Apply => "apply",
            TypeRule::Flatmap => "flatmap",
            TypeRule::Reduce => "reduce",
            TypeRule::ReduceByKey => "reduceByKey",
            TypeRule::Cogroup => "cogroup",
            TypeRule::Join => "join",
            TypeRule::Fixpoint => "fixpoint",
            TypeRule::Aggregate => "aggregate",
            TypeRule::Dist => "dist",
            TypeRule::Let => "let",
        }
    }
}

impl fmt::Display for TypeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("type error [{rule}]: {message}")]
pub struct TypeError {
    pub rule: TypeRule,
    pub message: String,
}

fn err<T>(rule: TypeRule, message: String) -> Result<T, TypeError> {
    Err(TypeError { rule, message })
}

fn pattern_err(e: TypeMismatch) -> TypeError {
    TypeError {
        rule: TypeRule::Pattern,
        message: format!("{e}"),
    }
}

#[derive(Clone)]
enum Entry {
    Type(TypeExpr),
    /// A let-bound lambda, checked at each use.
    Deferred {
        cases: Arc<[Case]>,
        scope: Scope,
    },
}

struct Node {
    name: Name,
    entry: Entry,
    next: Scope,
}

/// A persistent typing scope.
#[derive(Clone, Default)]
pub struct Scope(Option<Arc<Node>>);

impl Scope {
    pub fn new() -> Self {
        Scope(None)
    }

    pub fn from_env(env: &TypeEnv) -> Self {
        env.0
            .iter()
            .fold(Scope::new(), |s, (k, t)| s.with(k.clone(), t.clone()))
    }

    pub fn with(&self, name: Name, t: TypeExpr) -> Scope {
        self.push(name, Entry::Type(t))
    }

    fn push(&self, name: Name, entry: Entry) -> Scope {
        Scope(Some(Arc::new(Node {
            name,
            entry,
            next: self.clone(),
        })))
    }

    fn with_env(&self, env: TypeEnv) -> Scope {
        env.0.into_iter().fold(self.clone(), |s, (k, t)| s.with(k, t))
    }

    fn lookup(&self, x: &str) -> Option<&Entry> {
        let mut cur = self;
        while let Some(node) = &cur.0 {
            if &*node.name == x {
                return Some(&node.entry);
            }
            cur = &node.next;
        }
        None
    }

    /// Extends the scope with a let binding, deferring lambdas.
    pub fn bind(&self, x: Name, bound: &Expr) -> Result<Scope, TypeError> {
        Ok(match bound {
            Expr::Lambda(cases) => self.push(
                x,
                Entry::Deferred {
                    cases: cases.clone(),
                    scope: self.clone(),
                },
            ),
            _ => {
                let t = infer(self, bound)?;
                self.with(x, t)
            }
        })
    }
}

/// Infers the type of `e`.
pub fn infer(scope: &Scope, e: &Expr) -> Result<TypeExpr, TypeError> {
    match e {
        Expr::Lit(Literal::Int(_)) => Ok(TypeExpr::int()),
        Expr::Lit(Literal::Float(_)) => Ok(TypeExpr::float()),
        Expr::Lit(Literal::Str(_)) => Ok(TypeExpr::string()),
        Expr::Builtin(op) => builtin_type(*op, &[]),
        Expr::Var(x) => match scope.lookup(x) {
            Some(Entry::Type(t)) => Ok(t.clone()),
            Some(Entry::Deferred { .. }) => err(
                TypeRule::Lambda,
                format!("the parameter type of `{x}` cannot be inferred here; apply it or pass it to an operator"),
            ),
            None => err(TypeRule::Var, format!("unbound variable `{x}`")),
        },
        Expr::Empty => Ok(TypeExpr::local(TypeExpr::void())),
        Expr::Singleton(inner) => {
            let t = infer(scope, inner)?;
            if matches!(t, TypeExpr::DistBag(_) | TypeExpr::Func(..)) {
                return err(
                    TypeRule::Singleton,
                    format!("a local bag cannot hold values of type {t}"),
                );
            }
            Ok(TypeExpr::local(t))
        }
        Expr::Lambda(_) => err(
            TypeRule::Lambda,
            String::from("the parameter type of a lambda cannot be inferred without an application context"),
        ),
        Expr::Apply(f, a) => {
            let ta = infer(scope, a)?;
            check_app(scope, f, &[ta])
        }
        Expr::Construct(c, args) => {
            let mut params = Vec::with_capacity(args.len());
            for a in args {
                let t = infer(scope, a)?;
                if matches!(t, TypeExpr::DistBag(_) | TypeExpr::Func(..)) {
                    return err(
                        TypeRule::Construct,
                        format!("constructor `{c}` cannot hold a value of type {t}"),
                    );
                }
                params.push(t);
            }
            Ok(TypeExpr::ctor(c, params))
        }
        Expr::Flatmap(f, src) => {
            let ts = infer(scope, src)?;
            let elem = bag_elem(&ts, TypeRule::Flatmap, "source")?;
            let r = check_app(scope, f, &[elem])?;
            match r {
                TypeExpr::LocalBag(out) => Ok(ts.same_bag(*out).expect("bag")),
                TypeExpr::DistBag(_) => err(
                    TypeRule::Flatmap,
                    format!(
                        "the function passed to flatmap returns a distributed bag ({r}); it must return a local bag"
                    ),
                ),
                other => err(
                    TypeRule::Flatmap,
                    format!("the function passed to flatmap must return a local bag, not {other}"),
                ),
            }
        }
        Expr::Reduce { op, zero, src } => {
            let ts = infer(scope, src)?;
            let elem = bag_elem(&ts, TypeRule::Reduce, "source")?;
            let tz = infer(scope, zero)?;
            let t = sum_combine(&elem, &tz).map_err(|_| TypeError {
                rule: TypeRule::Reduce,
                message: format!("neutral element of type {tz} does not fit elements of type {elem}"),
            })?;
            check_binary_op(scope, op, &t, TypeRule::Reduce)?;
            Ok(t)
        }
        Expr::ReduceByKey { op, src, .. } => {
            let ts = infer(scope, src)?;
            let elem = bag_elem(&ts, TypeRule::ReduceByKey, "source")?;
            let Some((k, v)) = pair_parts(&elem) else {
                return err(
                    TypeRule::ReduceByKey,
                    format!("reduceByKey expects a bag of pairs, found elements of type {elem}"),
                );
            };
            check_binary_op(scope, op, &v, TypeRule::ReduceByKey)?;
            Ok(ts.same_bag(TypeExpr::pair(k, v)).expect("bag"))
        }
        Expr::Join(a, b) | Expr::Cogroup(a, b) => {
            let rule = if matches!(e, Expr::Join(..)) {
                TypeRule::Join
            } else {
                TypeRule::Cogroup
            };
            let (ta, tb) = (infer(scope, a)?, infer(scope, b)?);
            let ea = bag_elem(&ta, rule, "left input")?;
            let eb = bag_elem(&tb, rule, "right input")?;
            let (Some((ka, va)), Some((kb, vb))) = (pair_parts(&ea), pair_parts(&eb)) else {
                return err(rule, format!("{rule} expects bags of pairs, found {ta} and {tb}"));
            };
            let k = sum_combine(&ka, &kb).map_err(|_| TypeError {
                rule,
                message: format!("join keys have incompatible types {ka} and {kb}"),
            })?;
            let inner = if rule == TypeRule::Join {
                TypeExpr::pair(va, vb)
            } else {
                TypeExpr::pair(TypeExpr::local(va), TypeExpr::local(vb))
            };
            let elem = TypeExpr::pair(k, inner);
            Ok(if ta.is_dist() == tb.is_dist() {
                ta.same_bag(elem).expect("bag")
            } else {
                TypeExpr::dist(elem)
            })
        }
        Expr::Fixpoint { delta, seed, phi } => {
            let ts = infer(scope, seed)?;
            bag_elem(&ts, TypeRule::Fixpoint, "seed")?;
            let t = fixpoint_type(scope, &ts, phi)?;
            check_aggregator(scope, delta, t.bag_elem().expect("bag"), TypeRule::Fixpoint)?;
            Ok(t)
        }
        Expr::Aggregate(delta, inner) => {
            let t = infer(scope, inner)?;
            let elem = bag_elem(&t, TypeRule::Aggregate, "input")?;
            check_aggregator(scope, delta, &elem, TypeRule::Aggregate)?;
            Ok(t)
        }
        Expr::Dist(inner) => match infer(scope, inner)? {
            TypeExpr::LocalBag(t) => {
                let d = TypeExpr::DistBag(t);
                if !d.well_formed() {
                    return err(TypeRule::Dist, format!("{d} nests distributed data"));
                }
                Ok(d)
            }
            other => err(TypeRule::Dist, format!("dist expects a local bag, found {other}")),
        },
        Expr::Let(x, bound, body) => {
            let inner = scope.bind(x.clone(), bound)?;
            infer(&inner, body)
        }
    }
}

/// The type of `f` applied to arguments of the given types.
pub fn check_app(scope: &Scope, f: &Expr, args: &[TypeExpr]) -> Result<TypeExpr, TypeError> {
    let Some((first, rest)) = args.split_first() else {
        return infer(scope, f);
    };
    match f {
        Expr::Lambda(cases) => check_lambda(scope, cases, first, rest),
        Expr::Var(x) => match scope.lookup(x) {
            Some(Entry::Deferred { cases, scope: captured }) => check_lambda(captured, cases, first, rest),
            Some(Entry::Type(t)) => peel(t.clone(), args),
            None => err(TypeRule::Var, format!("unbound variable `{x}`")),
        },
        Expr::Builtin(op) => builtin_type(*op, args),
        Expr::Apply(h, a) => {
            let ta = infer(scope, a)?;
            let mut all = Vec::with_capacity(args.len() + 1);
            all.push(ta);
            all.extend_from_slice(args);
            check_app(scope, h, &all)
        }
        Expr::Let(x, bound, body) => {
            let inner = scope.bind(x.clone(), bound)?;
            check_app(&inner, body, args)
        }
        other => peel(infer(scope, other)?, args),
    }
}

/// Applies a function type to argument types, allowing subtyping.
fn peel(mut t: TypeExpr, args: &[TypeExpr]) -> Result<TypeExpr, TypeError> {
    for a in args {
        match t {
            TypeExpr::Func(from, to) => {
                if !subtype(a, &from) {
                    return err(
                        TypeRule::Apply,
                        format!("argument of type {a} is not a subtype of the parameter type {from}"),
                    );
                }
                t = *to;
            }
            other => return err(TypeRule::Apply, format!("{other} is not a function")),
        }
    }
    Ok(t)
}

fn check_lambda(scope: &Scope, cases: &[Case], param: &TypeExpr, rest: &[TypeExpr]) -> Result<TypeExpr, TypeError> {
    let mut domain: Option<TypeExpr> = None;
    let mut result: Option<TypeExpr> = None;
    for case in cases {
        if let Some(v) = case.pattern.duplicate_var() {
            return err(
                TypeRule::Pattern,
                format!("pattern `{}` binds `{v}` more than once", case.pattern),
            );
        }
        let (env, covered) = match match_type(&case.pattern, param) {
            Ok(m) => m,
            Err(e) => match closed_pattern_type(&case.pattern) {
                // A variable-free case that cannot match this argument type
                // widens the domain without binding anything.
                Some(t) => (TypeEnv::new(), t),
                None => return Err(pattern_err(e)),
            },
        };
        let body_t = check_app(&scope.with_env(env), &case.body, rest)?;
        domain = Some(match domain {
            None => covered,
            Some(d) => sum_combine(&d, &covered).map_err(|e| TypeError {
                rule: TypeRule::Lambda,
                message: format!("lambda cases have incompatible patterns: {e}"),
            })?,
        });
        result = Some(match result {
            None => body_t,
            Some(r) => sum_combine(&r, &body_t).map_err(|e| TypeError {
                rule: TypeRule::Lambda,
                message: format!("lambda cases return incompatible types: {e}"),
            })?,
        });
    }
    let domain = domain.expect("lambda has a case");
    if !subtype(param, &domain) {
        return err(
            TypeRule::Apply,
            format!("argument of type {param} is not covered by the lambda's patterns ({domain})"),
        );
    }
    Ok(result.expect("lambda has a case"))
}

/// Checks `op : t -> t -> t'` with `t' <: t`.
fn check_binary_op(scope: &Scope, op: &Expr, t: &TypeExpr, rule: TypeRule) -> Result<(), TypeError> {
    let r = check_app(scope, op, &[t.clone(), t.clone()]).map_err(|e| TypeError {
        rule,
        message: format!("operator does not accept two arguments of type {t}: {}", e.message),
    })?;
    if !subtype(&r, t) {
        return err(rule, format!("operator returns {r}, expected {t}"));
    }
    Ok(())
}

fn fixpoint_type(scope: &Scope, seed: &TypeExpr, phi: &Expr) -> Result<TypeExpr, TypeError> {
    let mut t = seed.clone();
    for _ in 0..2 {
        let r = check_app(scope, phi, core::slice::from_ref(&t))?;
        if r.is_dist() != t.is_dist() || r.bag_elem().is_none() {
            return err(
                TypeRule::Fixpoint,
                format!("the step function maps {t} to {r}; seed and result must be bags of the same kind"),
            );
        }
        if subtype(&r, &t) {
            return Ok(t);
        }
        t = sum_combine(&t, &r).map_err(|_| TypeError {
            rule: TypeRule::Fixpoint,
            message: format!("the step function maps {t} to incompatible {r}"),
        })?;
    }
    err(
        TypeRule::Fixpoint,
        format!("the step function does not preserve the seed type {seed}"),
    )
}

pub fn check_aggregator(scope: &Scope, delta: &Aggregator, elem: &TypeExpr, rule: TypeRule) -> Result<(), TypeError> {
    match &delta.kind {
        AggKind::Identity | AggKind::Distinct => Ok(()),
        AggKind::ByKey { op, pattern } => {
            if elem.is_void() {
                return Ok(());
            }
            let (env, _) = match_type(pattern, elem).map_err(pattern_err)?;
            let vars = pattern.vars();
            let Some(v) = vars.last() else {
                return err(rule, format!("by-key pattern `{pattern}` binds no value variable"));
            };
            let vt = env.get(v).expect("bound").clone();
            check_binary_op(scope, &Expr::Builtin(*op), &vt, rule)
        }
        AggKind::Filter {
            pattern,
            var,
            predicate,
        } => {
            if !pattern.binds(var) {
                return err(rule, format!("filter variable `{var}` does not occur in `{pattern}`"));
            }
            if elem.is_void() {
                return Ok(());
            }
            let (env, _) = match_type(pattern, elem).map_err(pattern_err)?;
            let vt = env.get(var).expect("bound").clone();
            let pt = infer(&scope.with(var.clone(), vt), predicate)?;
            if !subtype(&pt, &TypeExpr::bool()) {
                return err(rule, format!("filter predicate has type {pt}, expected Bool"));
            }
            Ok(())
        }
    }
}

fn bag_elem(t: &TypeExpr, rule: TypeRule, what: &str) -> Result<TypeExpr, TypeError> {
    t.bag_elem().cloned().ok_or_else(|| TypeError {
        rule,
        message: format!("{what} must be a bag, found {t}"),
    })
}

/// Key and value types of a pair element type; the empty sum splits into
/// two empty sums.
pub fn pair_parts(t: &TypeExpr) -> Option<(TypeExpr, TypeExpr)> {
    if t.is_void() {
        return Some((TypeExpr::void(), TypeExpr::void()));
    }
    t.as_pair().map(|(a, b)| (a.clone(), b.clone()))
}

/// Result type of a builtin applied to the given argument types. With fewer
/// arguments than its arity the remaining parameters take the type of the
/// first argument.
pub fn builtin_type(op: Builtin, args: &[TypeExpr]) -> Result<TypeExpr, TypeError> {
    let bool_t = TypeExpr::bool();
    let fixed: Option<(Vec<TypeExpr>, TypeExpr)> = match op {
        Builtin::Not => Some((alloc::vec![bool_t.clone()], bool_t.clone())),
        Builtin::And | Builtin::Or => Some((alloc::vec![bool_t.clone(), bool_t.clone()], bool_t.clone())),
        Builtin::Contains => Some((alloc::vec![TypeExpr::string(), TypeExpr::string()], bool_t.clone())),
        Builtin::BestRated => {
            let lm = TypeExpr::local(TypeExpr::ctor(
                "Landmark",
                alloc::vec![TypeExpr::string(), TypeExpr::int()],
            ));
            Some((alloc::vec![lm.clone(), lm.clone()], lm))
        }
        _ => None,
    };
    if let Some((params, result)) = fixed {
        let mut t = params
            .iter()
            .rev()
            .fold(result, |acc, p| TypeExpr::func(p.clone(), acc));
        if !args.is_empty() {
            t = peel(t, args).map_err(|e| TypeError {
                rule: TypeRule::Builtin,
                message: format!("`{op}`: {}", e.message),
            })?;
        }
        return Ok(t);
    }
    let Some(first) = args.first() else {
        return err(
            TypeRule::Builtin,
            format!("the overloaded builtin `{op}` needs an argument to fix its type"),
        );
    };
    let second = args.get(1).unwrap_or(first);
    let t = sum_combine(first, second).map_err(|_| TypeError {
        rule: TypeRule::Builtin,
        message: format!("`{op}` applied to incompatible types {first} and {second}"),
    })?;
    let is = |n: &str| matches!(&t, TypeExpr::Basic(b) if &**b == n);
    let numeric = is("Int") || is("Float");
    let ok = match op {
        Builtin::Eq | Builtin::Neq => !matches!(t, TypeExpr::Func(..)),
        Builtin::Add => numeric || is("String"),
        Builtin::Sub | Builtin::Mul | Builtin::Div => numeric,
        Builtin::Min | Builtin::Max | Builtin::Lt | Builtin::Le | Builtin::Gt | Builtin::Ge => numeric || is("String"),
        Builtin::BagUnion | Builtin::SetUnion => t.bag_elem().is_some(),
        _ => unreachable!("monomorphic builtins handled above"),
    };
    if !ok {
        return err(TypeRule::Builtin, format!("`{op}` is not defined on {t}"));
    }
    let result = match op {
        Builtin::Eq | Builtin::Neq | Builtin::Lt | Builtin::Le | Builtin::Gt | Builtin::Ge => bool_t,
        _ => t.clone(),
    };
    Ok(match args.len() {
        1 => TypeExpr::func(first.clone(), result),
        _ => peel(result, &args[2..])?,
    })
}

/// Whether `phi`, checked at `Bag(C(α))`, returns `Bag(C(α))`, where `C(α)`
/// is the input element type with the position bound by `var` made opaque.
/// A `true` answer means φ can only copy that component from its input
/// element to each output element.
pub fn check_condition_c(
    scope: &Scope,
    phi: &Expr,
    input_bag: &TypeExpr,
    pattern: &Pattern,
    var: &str,
) -> Result<bool, TypeMismatch> {
    let path = pattern.path_to(var).ok_or_else(|| TypeMismatch::Path {
        path: String::from(var),
        ty: input_bag.clone(),
    })?;
    let elem = input_bag.bag_elem().ok_or_else(|| TypeMismatch::Path {
        path: String::from(var),
        ty: input_bag.clone(),
    })?;
    let probe = crate::types::build_param_type(elem, &path, 0)?;
    Ok(preserves(scope, phi, input_bag, &probe))
}

/// Whether `phi : T<probe> -> T<probe>` with `T` the kind of `input_bag`.
pub fn preserves(scope: &Scope, phi: &Expr, input_bag: &TypeExpr, probe: &TypeExpr) -> bool {
    let Some(bag) = input_bag.same_bag(probe.clone()) else {
        return false;
    };
    matches!(check_app(scope, phi, core::slice::from_ref(&bag)), Ok(r) if subtype(&r, &bag))
}

/// Builds a typing scope from program inputs and `let` prefixes.
pub fn scope_of(inputs: &TypeEnv) -> Scope {
    Scope::from_env(inputs)
}

/// Convenience wrapper: the type of a closed program given its inputs.
pub fn typecheck(inputs: &TypeEnv, e: &Expr) -> Result<TypeExpr, TypeError> {
    infer(&Scope::from_env(inputs), e)
}

/// Peels `let` bindings off `e`, returning the scope they build and the body.
pub fn enter_lets<'a>(scope: &Scope, mut e: &'a Expr) -> Result<(Scope, &'a Expr), TypeError> {
    let mut s = scope.clone();
    while let Expr::Let(x, b, body) = e {
        s = s.bind(x.clone(), b)?;
        e = body;
    }
    Ok((s, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::name;
    use crate::pattern::Pattern;
    use alloc::string::ToString;
    use alloc::vec;

    fn pv(x: &str) -> Pattern {
        Pattern::var(x)
    }

    fn pt(a: Pattern, b: Pattern) -> Pattern {
        Pattern::tuple(vec![a, b])
    }

    fn ii() -> TypeExpr {
        TypeExpr::pair(TypeExpr::int(), TypeExpr::int())
    }

    fn tc_phi() -> Expr {
        let rev = Expr::lam1(
            pt(pv("a"), pv("b")),
            Expr::singleton(Expr::tuple(vec![Expr::var("b"), Expr::var("a")])),
        );
        let drop = Expr::lam1(
            pt(pv("mid"), pt(pv("src"), pv("dst"))),
            Expr::singleton(Expr::tuple(vec![Expr::var("src"), Expr::var("dst")])),
        );
        Expr::lam1(
            pv("X"),
            Expr::flatmap(drop, Expr::join(Expr::flatmap(rev, Expr::var("X")), Expr::var("R"))),
        )
    }

    fn scope() -> Scope {
        Scope::new().with(name("R"), TypeExpr::dist(ii()))
    }

    #[test]
    fn fixpoint_over_distributed_pairs() {
        let e = Expr::fixpoint(Aggregator::distinct(), Expr::var("R"), tc_phi());
        assert_eq!(infer(&scope(), &e).unwrap(), TypeExpr::dist(ii()));
    }

    #[test]
    fn flatmap_returning_distributed_bag_is_rejected() {
        let s = scope().with(name("X"), TypeExpr::local(TypeExpr::int()));
        let e = Expr::flatmap(Expr::lam1(pv("x"), Expr::var("R")), Expr::var("X"));
        let err = infer(&s, &e).unwrap_err();
        assert_eq!(err.rule, TypeRule::Flatmap);
    }

    #[test]
    fn join_of_local_and_distributed_is_distributed() {
        let s = Scope::new()
            .with(
                name("A"),
                TypeExpr::local(TypeExpr::pair(TypeExpr::int(), TypeExpr::bool())),
            )
            .with(name("B"), TypeExpr::dist(ii()));
        let t = infer(&s, &Expr::join(Expr::var("A"), Expr::var("B"))).unwrap();
        assert_eq!(t.to_string(), "Bag_d<(Int,(Bool,Int))>");
    }

    #[test]
    fn duplicate_pattern_variable_is_rejected() {
        let e = Expr::flatmap(
            Expr::lam1(pt(pv("x"), pv("x")), Expr::singleton(Expr::var("x"))),
            Expr::var("R"),
        );
        assert_eq!(infer(&scope(), &e).unwrap_err().rule, TypeRule::Pattern);
    }

    #[test]
    fn condition_c_on_transitive_closure() {
        let p = pt(pv("src"), pv("dst"));
        let bag = TypeExpr::dist(ii());
        assert!(check_condition_c(&scope(), &tc_phi(), &bag, &p, "src").unwrap());
        assert!(!check_condition_c(&scope(), &tc_phi(), &bag, &p, "dst").unwrap());
        let id = Expr::lam1(pv("X"), Expr::var("X"));
        assert!(check_condition_c(&scope(), &id, &bag, &p, "dst").unwrap());
    }

    #[test]
    fn if_then_else_types_both_branches() {
        let s = Scope::new().with(name("c"), TypeExpr::bool());
        let e = Expr::if_then_else(Expr::var("c"), Expr::int(1), Expr::int(0));
        assert_eq!(infer(&s, &e).unwrap(), TypeExpr::int());
        let bad = Expr::if_then_else(Expr::var("c"), Expr::int(1), Expr::str("x"));
        assert_eq!(infer(&s, &bad).unwrap_err().rule, TypeRule::Lambda);
    }

    #[test]
    fn rigid_admits_only_equality() {
        let s = Scope::new().with(name("a"), TypeExpr::Rigid(0));
        let eq = Expr::binop(Builtin::Eq, Expr::var("a"), Expr::var("a"));
        assert!(infer(&s, &eq).unwrap().is_bool());
        let plus = Expr::binop(Builtin::Add, Expr::var("a"), Expr::var("a"));
        assert!(infer(&s, &plus).is_err());
        let vs_int = Expr::binop(Builtin::Eq, Expr::var("a"), Expr::int(1));
        assert!(infer(&s, &vs_int).is_err());
    }

    #[test]
    fn let_bound_lambda_is_checked_per_use() {
        let e = Expr::let_in(
            "swap",
            Expr::lam1(
                pt(pv("a"), pv("b")),
                Expr::singleton(Expr::tuple(vec![Expr::var("b"), Expr::var("a")])),
            ),
            Expr::flatmap(Expr::var("swap"), Expr::var("R")),
        );
        assert_eq!(infer(&scope(), &e).unwrap(), TypeExpr::dist(ii()));
    }
}
