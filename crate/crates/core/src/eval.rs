//! Reference evaluator.
//!
//! Bag folds run in canonical element order. The fixpoint follows its
//! defining sequences literally: `R_0 = δ(R)`, `S_0 = R_0`, then
//! `R_{n+1} = δ(φ(R_n))` and `S_{n+1} = S_n ⊕_δ R_{n+1}` until `S` stops
//! changing. There is no differencing here; faster strategies live in
//! [`crate::dist`] and are tested against this one.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::aggregation::Delta;
use crate::builtin::{Builtin, BuiltinError};
use crate::expr::{Case, Expr};
use crate::pattern::{match_into, ArityMismatch};
use crate::value::{Bag, Name, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalLimits {
    pub max_fixpoint_iterations: u64,
    pub max_bag_cardinality: u64,
}

impl Default for EvalLimits {
    fn default() -> Self {
        EvalLimits {
            max_fixpoint_iterations: 1000,
            max_bag_cardinality: 10_000_000,
        }
    }
}

impl EvalLimits {
    pub fn new(max_fixpoint_iterations: u64, max_bag_cardinality: u64) -> Result<Self, EvalError> {
        if max_fixpoint_iterations == 0 || max_bag_cardinality == 0 {
            return Err(EvalError::Malformed(String::from(
                "evaluation limits must be strictly positive",
            )));
        }
        Ok(EvalLimits {
            max_fixpoint_iterations,
            max_bag_cardinality,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("fixpoint did not converge within {iterations} iterations")]
    IterationLimit { iterations: u64 },
    #[error("bag of {size} elements exceeds the cardinality limit of {limit}")]
    CardinalityLimit { size: u64, limit: u64 },
    #[error("no case matches {value}")]
    MatchFailure { value: String },
    #[error("malformed term: {0}")]
    Malformed(String),
    #[error(transparent)]
    Builtin(#[from] BuiltinError),
    #[error("unbound variable `{0}`")]
    Unbound(Name),
    #[error("internal soundness violation: {0}")]
    Soundness(String),
}

impl From<ArityMismatch> for EvalError {
    fn from(e: ArityMismatch) -> Self {
        EvalError::Malformed(e.to_string())
    }
}

/// A runtime result: data or a function.
#[derive(Clone)]
pub enum Val {
    Data(Value),
    Func(Func),
}

#[derive(Clone)]
pub enum Func {
    Closure(Arc<Closure>),
    Builtin { op: Builtin, args: Vec<Value> },
}

pub struct Closure {
    pub env: Env,
    pub cases: Arc<[Case]>,
}

impl Val {
    pub fn into_value(self) -> Result<Value, EvalError> {
        match self {
            Val::Data(v) => Ok(v),
            Val::Func(_) => Err(EvalError::Malformed(String::from("expected data, found a function"))),
        }
    }

    pub fn into_bag(self) -> Result<Bag, EvalError> {
        match self {
            Val::Data(Value::Bag(b)) => Ok(b),
            Val::Data(v) => Err(EvalError::Malformed(format!("expected a bag, found {v}"))),
            Val::Func(_) => Err(EvalError::Malformed(String::from("expected a bag, found a function"))),
        }
    }

    pub fn into_func(self) -> Result<Func, EvalError> {
        match self {
            Val::Func(f) => Ok(f),
            Val::Data(v) => Err(EvalError::Malformed(format!("{v} is not a function"))),
        }
    }
}

impl fmt::Debug for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Data(v) => write!(f, "{v}"),
            Val::Func(_) => f.write_str("<function>"),
        }
    }
}

struct Frame {
    bindings: Vec<(Name, Val)>,
    parent: Env,
}

/// A persistent value environment.
#[derive(Clone, Default)]
pub struct Env(Option<Arc<Frame>>);

impl Env {
    pub fn new() -> Self {
        Env(None)
    }

    pub fn with(&self, name: Name, v: Val) -> Env {
        self.with_all(alloc::vec![(name, v)])
    }

    pub fn with_value(&self, name: &str, v: Value) -> Env {
        self.with(Arc::from(name), Val::Data(v))
    }

    pub fn with_all(&self, bindings: Vec<(Name, Val)>) -> Env {
        if bindings.is_empty() {
            return self.clone();
        }
        Env(Some(Arc::new(Frame {
            bindings,
            parent: self.clone(),
        })))
    }

    pub fn lookup(&self, x: &str) -> Option<&Val> {
        let mut cur = self;
        while let Some(frame) = &cur.0 {
            if let Some((_, v)) = frame.bindings.iter().rev().find(|(n, _)| &**n == x) {
                return Some(v);
            }
            cur = &frame.parent;
        }
        None
    }
}

impl<'a> FromIterator<(&'a str, Value)> for Env {
    fn from_iter<I: IntoIterator<Item = (&'a str, Value)>>(iter: I) -> Self {
        Env::new().with_all(iter.into_iter().map(|(k, v)| (Arc::from(k), Val::Data(v))).collect())
    }
}

/// The outcome of a fixpoint run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixpointOutcome {
    pub result: Bag,
    /// Number of applications of φ.
    pub iterations: u64,
    /// `R_0, R_1, …` when tracing was requested.
    pub rounds: Vec<Bag>,
}

/// Executes fixpoint nodes on behalf of the evaluator; the partitioned
/// simulator plugs in here. `site` is the fixpoint node being evaluated.
pub trait FixpointRunner {
    fn run(&self, ev: &Evaluator<'_>, site: &Expr, delta: &Delta, seed: Bag, phi: &Func) -> Result<Bag, EvalError>;
}

#[derive(Clone, Copy)]
pub struct Evaluator<'r> {
    pub limits: EvalLimits,
    runner: Option<&'r dyn FixpointRunner>,
}

impl Default for Evaluator<'_> {
    fn default() -> Self {
        Evaluator::new(EvalLimits::default())
    }
}

impl<'r> Evaluator<'r> {
    pub fn new(limits: EvalLimits) -> Self {
        Evaluator { limits, runner: None }
    }

    pub fn with_runner(limits: EvalLimits, runner: &'r dyn FixpointRunner) -> Self {
        Evaluator {
            limits,
            runner: Some(runner),
        }
    }

    /// The same limits without the runner hook.
    pub fn plain(&self) -> Evaluator<'static> {
        Evaluator::new(self.limits)
    }

    pub fn check_size(&self, b: &Bag) -> Result<(), EvalError> {
        if b.len() > self.limits.max_bag_cardinality {
            return Err(EvalError::CardinalityLimit {
                size: b.len(),
                limit: self.limits.max_bag_cardinality,
            });
        }
        Ok(())
    }

    pub fn eval_value(&self, env: &Env, e: &Expr) -> Result<Value, EvalError> {
        self.eval(env, e)?.into_value()
    }

    pub fn eval_bag(&self, env: &Env, e: &Expr) -> Result<Bag, EvalError> {
        self.eval(env, e)?.into_bag()
    }

    pub fn eval(&self, env: &Env, e: &Expr) -> Result<Val, EvalError> {
        match e {
            Expr::Lit(l) => Ok(Val::Data(l.to_value())),
            Expr::Builtin(op) => Ok(Val::Func(Func::Builtin {
                op: *op,
                args: Vec::new(),
            })),
            Expr::Var(x) => env.lookup(x).cloned().ok_or_else(|| EvalError::Unbound(x.clone())),
            Expr::Empty => Ok(Val::Data(Value::Bag(Bag::new()))),
            Expr::Singleton(inner) => Ok(Val::Data(Value::Bag(Bag::singleton(self.eval_value(env, inner)?)))),
            Expr::Lambda(cases) => Ok(Val::Func(Func::Closure(Arc::new(Closure {
                env: env.clone(),
                cases: cases.clone(),
            })))),
            Expr::Apply(f, a) => {
                let arg = self.eval(env, a)?;
                if let Expr::Lambda(cases) = &**f {
                    return self.apply_cases(env, cases, arg);
                }
                let f = self.eval(env, f)?.into_func()?;
                self.apply(&f, arg)
            }
            Expr::Construct(c, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval_value(env, a))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Val::Data(Value::Constructed(c.clone(), Arc::from(vals))))
            }
            Expr::Flatmap(f, src) => {
                let f = self.eval(env, f)?.into_func()?;
                let src = self.eval_bag(env, src)?;
                let out = flatmap(&src, &mut |v| self.apply_bag(&f, v.clone()))?;
                self.check_size(&out)?;
                Ok(Val::Data(Value::Bag(out)))
            }
            Expr::Reduce { op, zero, src } => {
                let op = self.eval(env, op)?.into_func()?;
                let zero = self.eval_value(env, zero)?;
                let src = self.eval_bag(env, src)?;
                Ok(Val::Data(reduce(&src, zero, &mut |a, b| self.apply2(&op, a, b))?))
            }
            Expr::ReduceByKey { op, src, .. } => {
                let op = self.eval(env, op)?.into_func()?;
                let src = self.eval_bag(env, src)?;
                Ok(Val::Data(Value::Bag(reduce_by_key(&src, &mut |a, b| {
                    self.apply2(&op, a, b)
                })?)))
            }
            Expr::Join(a, b) => {
                let (a, b) = (self.eval_bag(env, a)?, self.eval_bag(env, b)?);
                let out = join(&a, &b)?;
                self.check_size(&out)?;
                Ok(Val::Data(Value::Bag(out)))
            }
            Expr::Cogroup(a, b) => {
                let (a, b) = (self.eval_bag(env, a)?, self.eval_bag(env, b)?);
                Ok(Val::Data(Value::Bag(cogroup(&a, &b)?)))
            }
            Expr::Fixpoint { delta, seed, phi } => {
                let delta = Delta::from_aggregator(delta, env);
                let seed = self.eval_bag(env, seed)?;
                let phi = self.eval(env, phi)?.into_func()?;
                let out = match self.runner {
                    Some(r) => r.run(self, e, &delta, seed, &phi)?,
                    None => self.fixpoint(&delta, seed, &phi, false)?.result,
                };
                Ok(Val::Data(Value::Bag(out)))
            }
            Expr::Aggregate(delta, inner) => {
                let delta = Delta::from_aggregator(delta, env);
                let b = self.eval_bag(env, inner)?;
                Ok(Val::Data(Value::Bag(delta.apply(self, b)?)))
            }
            Expr::Dist(inner) => self.eval(env, inner),
            Expr::Let(x, bound, body) => {
                let v = self.eval(env, bound)?;
                self.eval(&env.with(x.clone(), v), body)
            }
        }
    }

    fn apply_cases(&self, env: &Env, cases: &[Case], arg: Val) -> Result<Val, EvalError> {
        let v = match arg {
            Val::Data(v) => v,
            // Only a variable pattern can bind a function.
            f @ Val::Func(_) => {
                for c in cases {
                    if let crate::pattern::Pattern::Var(x) = &c.pattern {
                        return self.eval(&env.with(x.clone(), f), &c.body);
                    }
                }
                return Err(EvalError::MatchFailure {
                    value: String::from("<function>"),
                });
            }
        };
        let mut out = Vec::new();
        for c in cases {
            out.clear();
            if match_into(&v, &c.pattern, &mut out)? {
                let bindings = out.drain(..).map(|(n, v)| (n, Val::Data(v))).collect();
                return self.eval(&env.with_all(bindings), &c.body);
            }
        }
        Err(EvalError::MatchFailure { value: v.to_string() })
    }

    pub fn apply(&self, f: &Func, arg: Val) -> Result<Val, EvalError> {
        match f {
            Func::Closure(c) => self.apply_cases(&c.env, &c.cases, arg),
            Func::Builtin { op, args } => {
                let mut args = args.clone();
                args.push(arg.into_value()?);
                if args.len() == op.arity() {
                    Ok(Val::Data(op.apply(&args)?))
                } else {
                    Ok(Val::Func(Func::Builtin { op: *op, args }))
                }
            }
        }
    }

    pub fn apply_value(&self, f: &Func, v: Value) -> Result<Value, EvalError> {
        self.apply(f, Val::Data(v))?.into_value()
    }

    pub fn apply_bag(&self, f: &Func, v: Value) -> Result<Bag, EvalError> {
        self.apply(f, Val::Data(v))?.into_bag()
    }

    pub fn apply2(&self, f: &Func, a: Value, b: Value) -> Result<Value, EvalError> {
        if let Func::Builtin { op, args } = f {
            if args.is_empty() && op.arity() == 2 {
                return Ok(op.apply(&[a, b])?);
            }
        }
        let g = self.apply(f, Val::Data(a))?.into_func()?;
        self.apply_value(&g, b)
    }

    /// The literal fixpoint loop. With `trace`, the rounds `R_n` are kept.
    pub fn fixpoint(&self, delta: &Delta, seed: Bag, phi: &Func, trace: bool) -> Result<FixpointOutcome, EvalError> {
        fixpoint(
            self,
            delta,
            seed,
            &mut |r| self.apply_bag(phi, Value::Bag(r.clone())),
            trace,
        )
    }
}

/// `⊎ f(a)` over the elements of `src`, honoring multiplicities.
pub fn flatmap(src: &Bag, f: &mut dyn FnMut(&Value) -> Result<Bag, EvalError>) -> Result<Bag, EvalError> {
    let mut out = Bag::new();
    for (v, n) in src.iter() {
        let r = f(v)?;
        if *n == 1 {
            out.absorb(r);
        } else {
            for (w, m) in r.iter() {
                out.insert_n(w.clone(), m * n);
            }
        }
    }
    Ok(out)
}

/// Folds `op` over every element instance in canonical order.
pub fn reduce(
    src: &Bag,
    zero: Value,
    op: &mut dyn FnMut(Value, Value) -> Result<Value, EvalError>,
) -> Result<Value, EvalError> {
    let mut acc = zero;
    for v in src.instances() {
        acc = op(acc, v.clone())?;
    }
    Ok(acc)
}

fn pair(v: &Value) -> Result<(&Value, &Value), EvalError> {
    v.as_pair()
        .ok_or_else(|| EvalError::Malformed(format!("expected a pair, found {v}")))
}

/// One `(k, fold)` pair per distinct key.
pub fn reduce_by_key(
    src: &Bag,
    op: &mut dyn FnMut(Value, Value) -> Result<Value, EvalError>,
) -> Result<Bag, EvalError> {
    let mut groups: BTreeMap<Value, Value> = BTreeMap::new();
    for v in src.instances() {
        let (k, x) = pair(v)?;
        match groups.remove(k) {
            None => {
                groups.insert(k.clone(), x.clone());
            }
            Some(acc) => {
                groups.insert(k.clone(), op(acc, x.clone())?);
            }
        }
    }
    Ok(groups.into_iter().map(|(k, v)| Value::pair(k, v)).collect())
}

/// Values with their multiplicities, grouped by key.
type KeyIndex<'a> = BTreeMap<&'a Value, Vec<(&'a Value, u64)>>;

fn index_by_key(b: &Bag) -> Result<KeyIndex<'_>, EvalError> {
    let mut idx: KeyIndex<'_> = BTreeMap::new();
    for (v, n) in b.iter() {
        let (k, x) = pair(v)?;
        idx.entry(k).or_default().push((x, *n));
    }
    Ok(idx)
}

/// `{(k, (v, w)) | (k, v) ∈ a, (k, w) ∈ b}`; multiplicities multiply.
pub fn join(a: &Bag, b: &Bag) -> Result<Bag, EvalError> {
    let idx = index_by_key(b)?;
    let mut out = Bag::new();
    for (v, m) in a.iter() {
        let (k, x) = pair(v)?;
        if let Some(ws) = idx.get(k) {
            for (w, n) in ws {
                out.insert_n(Value::pair(k.clone(), Value::pair(x.clone(), (*w).clone())), m * n);
            }
        }
    }
    Ok(out)
}

/// One `(k, (V, W))` per key of either side, where `V` and `W` are the bags
/// of values for `k`.
pub fn cogroup(a: &Bag, b: &Bag) -> Result<Bag, EvalError> {
    let mut groups: BTreeMap<Value, (Bag, Bag)> = BTreeMap::new();
    for (v, n) in a.iter() {
        let (k, x) = pair(v)?;
        groups.entry(k.clone()).or_default().0.insert_n(x.clone(), *n);
    }
    for (v, n) in b.iter() {
        let (k, x) = pair(v)?;
        groups.entry(k.clone()).or_default().1.insert_n(x.clone(), *n);
    }
    Ok(groups
        .into_iter()
        .map(|(k, (l, r))| Value::pair(k, Value::pair(Value::Bag(l), Value::Bag(r))))
        .collect())
}

/// The fixpoint loop over an arbitrary step function. Returns the iteration
/// limit error once φ has been applied `max_fixpoint_iterations` times
/// without `S` stabilizing.
pub fn fixpoint(
    ev: &Evaluator<'_>,
    delta: &Delta,
    seed: Bag,
    phi: &mut dyn FnMut(&Bag) -> Result<Bag, EvalError>,
    trace: bool,
) -> Result<FixpointOutcome, EvalError> {
    let mut r = delta.apply(ev, seed)?;
    let mut s = r.clone();
    let mut rounds = Vec::new();
    if trace {
        rounds.push(r.clone());
    }
    let mut iterations = 0;
    loop {
        if iterations == ev.limits.max_fixpoint_iterations {
            return Err(EvalError::IterationLimit { iterations });
        }
        let p = phi(&r)?;
        iterations += 1;
        ev.check_size(&p)?;
        let next = delta.combine(ev, &s, &p)?;
        ev.check_size(&next)?;
        if next == s {
            return Ok(FixpointOutcome {
                result: s,
                iterations,
                rounds,
            });
        }
        r = delta.apply(ev, p)?;
        if trace {
            rounds.push(r.clone());
        }
        s = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Aggregator;
    use crate::pattern::Pattern;
    use alloc::vec;
    use proptest::prelude::*;

    fn ints(xs: &[i64]) -> Bag {
        xs.iter().map(|&i| Value::Int(i)).collect()
    }

    fn pairs(xs: &[(i64, i64)]) -> Bag {
        xs.iter()
            .map(|&(a, b)| Value::pair(Value::Int(a), Value::Int(b)))
            .collect()
    }

    fn plus(a: Value, b: Value) -> Result<Value, EvalError> {
        Ok(Builtin::Add.apply(&[a, b])?)
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(
            reduce(&ints(&[1, 4, 6]), Value::Int(0), &mut plus).unwrap(),
            Value::Int(11)
        );
        assert_eq!(reduce(&Bag::new(), Value::Int(0), &mut plus).unwrap(), Value::Int(0));
        let min = &mut |a, b| Ok(Builtin::Min.apply(&[a, b])?);
        let floats: Bag = [3.0, 1.0, 2.0].iter().map(|&f| Value::float(f)).collect();
        assert_eq!(
            reduce(&floats, crate::builtin::infinity(), min).unwrap(),
            Value::float(1.0)
        );
    }

    #[test]
    fn reduce_by_key_examples() {
        let src = pairs(&[(1, 2), (1, 4), (2, 2), (2, 1), (1, 3)]);
        assert_eq!(reduce_by_key(&src, &mut plus).unwrap(), pairs(&[(1, 9), (2, 3)]));
        assert_eq!(reduce_by_key(&Bag::new(), &mut plus).unwrap(), Bag::new());
    }

    #[test]
    fn join_multiplies_multiplicities() {
        let a: Bag = core::iter::repeat_n(Value::pair(Value::Int(1), Value::str("a")), 2).collect();
        let b = Bag::singleton(Value::pair(Value::Int(1), Value::str("x")));
        let j = join(&a, &b).unwrap();
        assert_eq!(j.len(), 2);
        assert_eq!(j.distinct_len(), 1);
        assert_eq!(join(&a, &Bag::new()).unwrap(), Bag::new());
    }

    #[test]
    fn cogroup_keeps_groups_as_bags() {
        let c = cogroup(&pairs(&[(1, 2), (1, 2)]), &Bag::new()).unwrap();
        assert_eq!(c.to_string(), "{Tuple(1,Tuple({2, 2},{}))}");
        let c = cogroup(&pairs(&[(1, 2), (2, 3)]), &pairs(&[(1, 5)])).unwrap();
        assert_eq!(c.to_string(), "{Tuple(1,Tuple({2},{5})), Tuple(2,Tuple({3},{}))}");
    }

    #[test]
    fn flatmap_respects_multiplicity() {
        let ev = Evaluator::default();
        let f = Expr::lam1(
            Pattern::var("x"),
            Expr::binop(
                Builtin::BagUnion,
                Expr::singleton(Expr::var("x")),
                Expr::singleton(Expr::var("x")),
            ),
        );
        let e = Expr::flatmap(f, Expr::var("A"));
        let env: Env = [("A", Value::Bag(ints(&[1, 2])))].into_iter().collect();
        assert_eq!(ev.eval_bag(&env, &e).unwrap(), ints(&[1, 1, 2, 2]));
    }

    #[test]
    fn lambda_cases_are_tried_in_order() {
        let ev = Evaluator::default();
        let f = Expr::lambda(vec![
            Case {
                pattern: Pattern::ctor("True", vec![]),
                body: Expr::int(1),
            },
            Case {
                pattern: Pattern::ctor("False", vec![]),
                body: Expr::int(0),
            },
        ]);
        let e = Expr::apply(f, Expr::bool(false));
        assert_eq!(ev.eval_value(&Env::new(), &e).unwrap(), Value::Int(0));
        let swap = Expr::lam1(
            Pattern::tuple(vec![Pattern::var("x"), Pattern::var("y")]),
            Expr::singleton(Expr::tuple(vec![Expr::var("y"), Expr::var("x")])),
        );
        let e = Expr::apply(swap, Expr::tuple(vec![Expr::int(1), Expr::int(2)]));
        assert_eq!(ev.eval_value(&Env::new(), &e).unwrap().to_string(), "{Tuple(2,1)}");
        let none = Expr::apply(
            Expr::lam1(Pattern::ctor("True", vec![]), Expr::int(1)),
            Expr::bool(false),
        );
        assert!(matches!(
            ev.eval(&Env::new(), &none),
            Err(EvalError::MatchFailure { .. })
        ));
    }

    #[test]
    fn empty_seed_gives_empty_result() {
        let ev = Evaluator::default();
        let out = fixpoint(&ev, &Delta::Distinct, Bag::new(), &mut |r| Ok(r.clone()), false).unwrap();
        assert_eq!(out.result, Bag::new());
    }

    #[test]
    fn identity_delta_diverges_on_self_reproducing_step() {
        let ev = Evaluator::new(EvalLimits::new(50, 1_000_000).unwrap());
        let err = fixpoint(&ev, &Delta::Identity, ints(&[1]), &mut |r| Ok(r.clone()), false).unwrap_err();
        assert_eq!(err, EvalError::IterationLimit { iterations: 50 });
    }

    #[test]
    fn cardinality_limit_is_enforced() {
        let ev = Evaluator::new(EvalLimits::new(100, 10).unwrap());
        let err = fixpoint(&ev, &Delta::Identity, ints(&[1, 2, 3]), &mut |r| Ok(r.union(r)), false).unwrap_err();
        assert!(matches!(err, EvalError::CardinalityLimit { .. }));
    }

    fn small_bag() -> impl Strategy<Value = Bag> {
        proptest::collection::vec((0i64..4, 0i64..4), 0..8).prop_map(|xs| pairs(&xs))
    }

    proptest! {
        #[test]
        fn kernels_are_homomorphisms(a in small_bag(), b in small_bag(), c in small_bag()) {
            let swap = &mut |v: &Value| {
                let (x, y) = v.as_pair().unwrap();
                Ok(Bag::singleton(Value::pair(y.clone(), x.clone())))
            };
            prop_assert_eq!(
                flatmap(&a.union(&b), swap).unwrap(),
                flatmap(&a, swap).unwrap().union(&flatmap(&b, swap).unwrap())
            );
            prop_assert_eq!(
                join(&a.union(&b), &c).unwrap(),
                join(&a, &c).unwrap().union(&join(&b, &c).unwrap())
            );
            let sum = |x: &Bag| {
                reduce(&flatmap(x, &mut |v| Ok(Bag::singleton(v.as_pair().unwrap().1.clone()))).unwrap(), Value::Int(0), &mut plus).unwrap()
            };
            prop_assert_eq!(sum(&a.union(&b)), plus(sum(&a), sum(&b)).unwrap());
        }

        #[test]
        fn join_is_a_flatmap_over_the_local_side(a in small_bag(), b in small_bag()) {
            let via_flatmap = flatmap(&a, &mut |v| {
                let (k, x) = v.as_pair().unwrap();
                flatmap(&b, &mut |w| {
                    let (k2, y) = w.as_pair().unwrap();
                    Ok(if k == k2 {
                        Bag::singleton(Value::pair(k.clone(), Value::pair(x.clone(), y.clone())))
                    } else {
                        Bag::new()
                    })
                })
            }).unwrap();
            prop_assert_eq!(via_flatmap, join(&a, &b).unwrap());
        }
    }

    #[test]
    fn aggregator_builds_from_expr() {
        let d = Delta::from_aggregator(&Aggregator::distinct(), &Env::new());
        assert!(matches!(d, Delta::Distinct));
    }
}
