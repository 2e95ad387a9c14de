//! Fixpoint rewrite rules and the distribution planner.
//!
//! - PF pushes a filter on the result of a distinct fixpoint into its seed
//!   when φ preserves the filtered components.
//! - PJ turns a join with a distinct fixpoint into a semi-join filter on
//!   the seed when φ preserves the join key.
//! - PA moves an aggregation applied to a fixpoint's result inside the loop
//!   when it is compatible with φ.
//! - P_dist picks a partitioned plan for every fixpoint.
//!
//! Rules only look outside lambda bodies. Single-use `let`s bound to
//! fixpoints are inlined first so that the rules can see their uses.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::aggregation::{Delta, Verdict};
use crate::builtin::Builtin;
use crate::dist::{find_repartition_key, fixpoint_sites, repartition_allowed, Plan};
use crate::eval::{Env, EvalLimits, Evaluator};
use crate::expr::{AggKind, Aggregator, Case, Expr};
use crate::pattern::{format_path, Pattern};
use crate::sample::Sampler;
use crate::syntax::print_expr;
use crate::typeck::{check_condition_c, infer, typecheck, Scope, TypeError};
use crate::types::{TypeEnv, TypeExpr};
use crate::value::{Name, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rule {
    PF,
    PJ,
    PA,
    PDist,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::PF => "PF",
            Rule::PJ => "PJ",
            Rule::PA => "PA",
            Rule::PDist => "P_dist",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Applied,
    Skipped,
    /// A plan was chosen; the term is unchanged.
    Planned,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub rule: Rule,
    pub outcome: Outcome,
    pub reason: String,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RewriteTrace(pub Vec<TraceEntry>);

impl RewriteTrace {
    pub fn applied(&self) -> impl Iterator<Item = &TraceEntry> {
        self.0.iter().filter(|t| t.outcome == Outcome::Applied)
    }

    pub fn applied_rules(&self) -> Vec<Rule> {
        self.applied().map(|t| t.rule).collect()
    }

    fn push(&mut self, rule: Rule, outcome: Outcome, reason: String, before: &Expr, after: &Expr) {
        self.0.push(TraceEntry {
            rule,
            outcome,
            reason,
            before: print_expr(before),
            after: print_expr(after),
        });
    }

    fn extend(&mut self, other: RewriteTrace) {
        self.0.extend(other.0);
    }
}

impl fmt::Display for RewriteTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return writeln!(f, "no fixpoint rewrites apply");
        }
        for t in &self.0 {
            let outcome = match t.outcome {
                Outcome::Applied => "applied",
                Outcome::Skipped => "skipped",
                Outcome::Planned => "planned",
            };
            writeln!(f, "{} {outcome}: {}", t.rule.name(), t.reason)?;
            writeln!(f, "  before: {}", t.before)?;
            if t.outcome == Outcome::Applied {
                writeln!(f, "  after:  {}", t.after)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteDirective {
    /// Preorder index among the fixpoint nodes of the optimized term.
    pub site: usize,
    pub plan: Plan,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimized {
    pub expr: Expr,
    pub directives: Vec<SiteDirective>,
    pub trace: RewriteTrace,
}

impl Optimized {
    pub fn plans(&self) -> BTreeMap<usize, Plan> {
        self.directives.iter().map(|d| (d.site, d.plan.clone())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Input(#[from] TypeError),
    #[error("internal error: output of {rule} does not typecheck: {error}")]
    Internal { rule: &'static str, error: TypeError },
}

/// Whether the body of `λX. body` is built from `X` only by
/// `flatmap(f, H)`, `join(H, A)` and `join(A, H)` with `X` absent from `f`
/// and `A`.
pub fn is_syntactic_homomorphism(lam: &Expr) -> bool {
    let Expr::Lambda(cases) = lam else {
        return false;
    };
    match &cases[..] {
        [Case {
            pattern: Pattern::Var(x),
            body,
        }] => in_h(body, x),
        _ => false,
    }
}

fn in_h(e: &Expr, x: &str) -> bool {
    match e {
        Expr::Var(v) => &**v == x,
        Expr::Flatmap(f, src) => !f.mentions(x) && in_h(src, x),
        Expr::Join(a, b) => (in_h(a, x) && !b.mentions(x)) || (in_h(b, x) && !a.mentions(x)),
        _ => false,
    }
}

/// Everything a rule needs about the position of a node: its typing scope
/// and the `let`s above it.
#[derive(Clone)]
pub struct Context {
    pub inputs: TypeEnv,
    pub scope: Scope,
    pub lets: Vec<(Name, Expr)>,
}

impl Context {
    pub fn new(inputs: &TypeEnv) -> Self {
        Context {
            inputs: inputs.clone(),
            scope: Scope::from_env(inputs),
            lets: Vec::new(),
        }
    }

    fn enter_let(&self, x: &Name, bound: &Expr) -> Result<Context, TypeError> {
        let mut lets = self.lets.clone();
        lets.push((x.clone(), bound.clone()));
        Ok(Context {
            inputs: self.inputs.clone(),
            scope: self.scope.bind(x.clone(), bound)?,
            lets,
        })
    }

    /// The lambda a φ position denotes, looking through `let`s.
    fn resolve<'a>(&'a self, phi: &'a Expr) -> &'a Expr {
        let mut cur = phi;
        for _ in 0..self.lets.len() + 1 {
            match cur {
                Expr::Var(x) => match self.lets.iter().rev().find(|(n, _)| n == x) {
                    Some((_, b)) => cur = b,
                    None => return cur,
                },
                _ => return cur,
            }
        }
        cur
    }
}

/// Rewrites bottom-up outside lambda bodies.
fn rewrite_nodes(
    ctx: &Context,
    e: &Expr,
    trace: &mut RewriteTrace,
    rule: &mut dyn FnMut(&Context, &Expr, &mut RewriteTrace) -> Option<Expr>,
) -> Expr {
    let node = match e {
        Expr::Lambda(_) => return e.clone(),
        Expr::Let(x, bound, body) => {
            let bound = rewrite_nodes(ctx, bound, trace, rule);
            let body = match ctx.enter_let(x, &bound) {
                Ok(inner) => rewrite_nodes(&inner, body, trace, rule),
                Err(_) => (**body).clone(),
            };
            Expr::Let(x.clone(), Box::new(bound), Box::new(body))
        }
        _ => e.map_children(&mut |c| rewrite_nodes(ctx, c, trace, rule)),
    };
    rule(ctx, &node, trace).unwrap_or(node)
}

fn count_free(e: &Expr, x: &str) -> usize {
    match e {
        Expr::Var(v) => usize::from(&**v == x),
        Expr::Lambda(cases) => cases
            .iter()
            .filter(|c| !c.pattern.binds(x))
            .map(|c| count_free(&c.body, x))
            .sum(),
        Expr::Let(y, b, body) => count_free(b, x) + if &**y == x { 0 } else { count_free(body, x) },
        _ => {
            let pred = match e.aggregator().map(|a| &a.kind) {
                Some(AggKind::Filter { var, predicate, .. }) if &**var != x => count_free(predicate, x),
                _ => 0,
            };
            pred + e.children().into_iter().map(|c| count_free(c, x)).sum::<usize>()
        }
    }
}

/// Inlines `let x = μ(...) in body` when `x` occurs once in `body`, outside
/// any lambda.
pub fn inline_fixpoint_lets(e: &Expr) -> Expr {
    match e {
        Expr::Lambda(_) => e.clone(),
        Expr::Let(x, bound, body) => {
            let bound = inline_fixpoint_lets(bound);
            let body = inline_fixpoint_lets(body);
            let once_outside = count_free(&body, x) == 1 && count_outside_lambdas(&body, x) == 1;
            if matches!(bound, Expr::Fixpoint { .. }) && once_outside {
                body.subst(x, &bound)
            } else {
                Expr::Let(x.clone(), Box::new(bound), Box::new(body))
            }
        }
        _ => e.map_children(&mut inline_fixpoint_lets),
    }
}

fn count_outside_lambdas(e: &Expr, x: &str) -> usize {
    match e {
        Expr::Var(v) => usize::from(&**v == x),
        Expr::Lambda(_) => 0,
        Expr::Let(y, b, body) => {
            count_outside_lambdas(b, x) + if &**y == x { 0 } else { count_outside_lambdas(body, x) }
        }
        _ => e.children().into_iter().map(|c| count_outside_lambdas(c, x)).sum(),
    }
}

/// `\p -> if c then {p} else {}`, split into its pattern and conjuncts.
pub fn as_filter(f: &Expr) -> Option<(&Pattern, Vec<&Expr>)> {
    let Expr::Lambda(cases) = f else { return None };
    let [case] = &cases[..] else { return None };
    let (c, then, other) = case.body.as_if()?;
    match (then, other) {
        (Expr::Singleton(x), Expr::Empty) if **x == Expr::from_pattern(&case.pattern) => {
            let mut out = Vec::new();
            conjuncts(c, &mut out);
            Some((&case.pattern, out))
        }
        _ => None,
    }
}

fn conjuncts<'a>(c: &'a Expr, out: &mut Vec<&'a Expr>) {
    if let Expr::Apply(f, b) = c {
        if let Expr::Apply(g, a) = &**f {
            if **g == Expr::Builtin(Builtin::And) {
                conjuncts(a, out);
                conjuncts(b, out);
                return;
            }
        }
    }
    out.push(c);
}

/// The filter function keeping elements matching `p` that satisfy every
/// conjunct.
pub fn make_filter(p: &Pattern, conds: &[&Expr]) -> Expr {
    let mut it = conds.iter().map(|c| (*c).clone());
    let first = it.next().unwrap_or_else(|| Expr::bool(true));
    let c = it.fold(first, |acc, c| Expr::binop(Builtin::And, acc, c));
    Expr::lam1(
        p.clone(),
        Expr::if_then_else(c, Expr::singleton(Expr::from_pattern(p)), Expr::Empty),
    )
}

fn fixpoint_type(ctx: &Context, fix: &Expr) -> Option<TypeExpr> {
    infer(&ctx.scope, fix).ok()
}

fn pf_at(ctx: &Context, e: &Expr, trace: &mut RewriteTrace) -> Option<Expr> {
    let Expr::Flatmap(f, src) = e else { return None };
    let Expr::Fixpoint { delta, seed, phi } = &**src else {
        return None;
    };
    let (pattern, conds) = as_filter(f)?;
    if !delta.is_distinct() {
        trace.push(
            Rule::PF,
            Outcome::Skipped,
            format!("the fixpoint aggregates with {}, not distinct", delta.label()),
            e,
            e,
        );
        return None;
    }
    let fix_t = fixpoint_type(ctx, src)?;
    let vars = pattern.vars();
    let mut pushed = Vec::new();
    let mut kept = Vec::new();
    let mut failed: Vec<Name> = Vec::new();
    for c in conds {
        let fv = c.free_vars();
        let mut ok = true;
        for v in vars.iter().filter(|v| fv.contains(*v)) {
            if !matches!(check_condition_c(&ctx.scope, phi, &fix_t, pattern, v), Ok(true)) {
                ok = false;
                if !failed.contains(v) {
                    failed.push(v.clone());
                }
            }
        }
        if ok {
            pushed.push(c);
        } else {
            kept.push(c);
        }
    }
    let failures = failed.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
    if pushed.is_empty() {
        trace.push(
            Rule::PF,
            Outcome::Skipped,
            format!("condition (C) fails for {failures}"),
            e,
            e,
        );
        return None;
    }
    let new_fix = Expr::Fixpoint {
        delta: delta.clone(),
        seed: Box::new(Expr::flatmap(make_filter(pattern, &pushed), (**seed).clone())),
        phi: phi.clone(),
    };
    let (out, reason) = if kept.is_empty() {
        (new_fix, String::from("filter pushed into the seed"))
    } else {
        (
            Expr::flatmap(make_filter(pattern, &kept), new_fix),
            format!(
                "split filter: pushed {} conjunct(s); condition (C) fails for {failures}",
                pushed.len()
            ),
        )
    };
    trace.push(Rule::PF, Outcome::Applied, reason, e, &out);
    Some(out)
}

/// `F_A(R)`: elements of `r` whose key occurs in `a`, via cogroup.
pub fn semi_join_filter(r: &Expr, a: &Expr) -> Expr {
    let p = Pattern::tuple(alloc::vec![
        Pattern::var("k"),
        Pattern::tuple(alloc::vec![Pattern::var("sx"), Pattern::var("sy")]),
    ]);
    let keep = Expr::flatmap(
        Expr::lam1(
            Pattern::var("x"),
            Expr::singleton(Expr::tuple(alloc::vec![Expr::var("k"), Expr::var("x")])),
        ),
        Expr::var("sx"),
    );
    let body = Expr::if_then_else(
        Expr::binop(Builtin::Eq, Expr::var("sy"), Expr::Empty),
        Expr::Empty,
        keep,
    );
    Expr::flatmap(Expr::lam1(p, body), Expr::cogroup(r.clone(), a.clone()))
}

fn is_semi_join_of(seed: &Expr, a: &Expr) -> bool {
    match seed {
        Expr::Flatmap(_, src) => match &**src {
            Expr::Cogroup(r, other) => **other == *a && *seed == semi_join_filter(r, a),
            _ => false,
        },
        _ => false,
    }
}

fn pj_at(ctx: &Context, e: &Expr, trace: &mut RewriteTrace) -> Option<Expr> {
    let Expr::Join(l, r) = e else { return None };
    let (other, fix, fix_left) = match (&**l, &**r) {
        (a, f @ Expr::Fixpoint { .. }) => (a, f, false),
        (f @ Expr::Fixpoint { .. }, a) => (a, f, true),
        _ => return None,
    };
    let Expr::Fixpoint { delta, seed, phi } = fix else {
        return None;
    };
    if !delta.is_distinct() {
        trace.push(
            Rule::PJ,
            Outcome::Skipped,
            format!("the fixpoint aggregates with {}, not distinct", delta.label()),
            e,
            e,
        );
        return None;
    }
    if is_semi_join_of(seed, other) {
        return None;
    }
    let fix_t = fixpoint_type(ctx, fix)?;
    let kv = Pattern::tuple(alloc::vec![Pattern::var("k"), Pattern::var("v")]);
    if !matches!(check_condition_c(&ctx.scope, phi, &fix_t, &kv, "k"), Ok(true)) {
        trace.push(
            Rule::PJ,
            Outcome::Skipped,
            String::from("condition (C) fails for the join key"),
            e,
            e,
        );
        return None;
    }
    let new_fix = Expr::Fixpoint {
        delta: delta.clone(),
        seed: Box::new(semi_join_filter(seed, other)),
        phi: phi.clone(),
    };
    let out = if fix_left {
        Expr::join(new_fix, other.clone())
    } else {
        Expr::join(other.clone(), new_fix)
    };
    trace.push(
        Rule::PJ,
        Outcome::Applied,
        String::from("seed restricted to keys present on the other join side"),
        e,
        &out,
    );
    Some(out)
}

const PROBE_ENVIRONMENTS: u64 = 20;
const PROBE_SAMPLES: usize = 10;

/// Evaluates the `let` prefix over sampled inputs and probes
/// `δ∘φ∘δ = δ∘φ` on sampled bags. `None` when no environment could be
/// built.
fn probe(ctx: &Context, agg: &Aggregator, phi: &Expr, elem: &TypeExpr) -> Option<Verdict> {
    let ev = Evaluator::new(EvalLimits {
        max_fixpoint_iterations: 64,
        max_bag_cardinality: 100_000,
    });
    let mut total = 0;
    for round in 0..PROBE_ENVIRONMENTS {
        let mut sampler = Sampler::new(0x5eed ^ round);
        let mut env = Env::new();
        let mut ok = true;
        for (x, t) in &ctx.inputs.0 {
            match sampler.value(t) {
                Some(v) => env = env.with_value(x, v),
                None => ok = false,
            }
        }
        for (x, b) in &ctx.lets {
            match ev.eval(&env, b) {
                Ok(v) => env = env.with(x.clone(), v),
                Err(_) => ok = false,
            }
        }
        if !ok {
            continue;
        }
        let Ok(f) = ev.eval(&env, phi).and_then(|v| v.into_func()) else {
            continue;
        };
        let delta = Delta::from_aggregator(agg, &env);
        let mut step = |b: &crate::value::Bag| ev.apply_bag(&f, Value::Bag(b.clone()));
        let mut samples = sampler.bags(elem).take(PROBE_SAMPLES);
        match delta.probe_compatibility(&ev, &mut step, &mut samples) {
            Ok(v @ Verdict::Refuted { .. }) => return Some(v),
            Ok(Verdict::NotRefuted { samples }) => total += samples,
            Err(_) => continue,
        }
    }
    (total > 0).then_some(Verdict::NotRefuted { samples: total })
}

fn pa_at(ctx: &Context, e: &Expr, trace: &mut RewriteTrace) -> Option<Expr> {
    let (agg, fix) = match e {
        Expr::ReduceByKey { op, src, compat } => match (&**op, &**src) {
            (Expr::Builtin(b), f @ Expr::Fixpoint { .. }) if b.arity() == 2 => (
                Aggregator::by_key(*b, Aggregator::pair_pattern()).with_compat(compat.clone()),
                f,
            ),
            _ => return None,
        },
        Expr::Aggregate(agg, inner) if matches!(**inner, Expr::Fixpoint { .. }) => (agg.clone(), &**inner),
        _ => return None,
    };
    let Expr::Fixpoint { delta, seed, phi } = fix else {
        return None;
    };
    let skip = |trace: &mut RewriteTrace, reason: String| {
        trace.push(Rule::PA, Outcome::Skipped, reason, e, e);
        None
    };
    if !(delta.is_distinct() || delta.is_identity()) {
        return skip(trace, format!("the fixpoint already aggregates with {}", delta.label()));
    }
    let reason = if agg.is_distinct() {
        String::from("distinct is compatible with every homomorphism")
    } else {
        if delta.is_distinct() && !Delta::from_aggregator(&agg, &Env::new()).absorbs_duplicates() {
            return skip(
                trace,
                format!("{} counts duplicates that the distinct fixpoint removes", agg.label()),
            );
        }
        if !agg.compatible_with.covers(phi) {
            return skip(trace, String::from("no compatibility evidence"));
        }
        let elem = fixpoint_type(ctx, fix)?.bag_elem()?.clone();
        match probe(ctx, &agg, phi, &elem) {
            Some(Verdict::Refuted { witness }) => {
                return skip(trace, format!("compatibility annotation refuted on {witness}"));
            }
            Some(Verdict::NotRefuted { samples }) => {
                format!("annotated compatible; not refuted on {samples} samples")
            }
            None => String::from("annotated compatible; probe could not sample inputs"),
        }
    };
    let out = Expr::Fixpoint {
        delta: Aggregator {
            kind: agg.kind.clone(),
            compatible_with: agg.compatible_with.clone(),
        },
        seed: seed.clone(),
        phi: phi.clone(),
    };
    trace.push(
        Rule::PA,
        Outcome::Applied,
        format!("{} moved inside: {reason}", agg.label()),
        e,
        &out,
    );
    Some(out)
}

pub fn rewrite_pf(ctx: &Context, e: &Expr) -> (Expr, RewriteTrace) {
    let mut trace = RewriteTrace::default();
    let out = rewrite_nodes(ctx, e, &mut trace, &mut pf_at);
    (out, trace)
}

pub fn rewrite_pj(ctx: &Context, e: &Expr) -> (Expr, RewriteTrace) {
    let mut trace = RewriteTrace::default();
    let out = rewrite_nodes(ctx, e, &mut trace, &mut pj_at);
    (out, trace)
}

pub fn rewrite_pa(ctx: &Context, e: &Expr) -> (Expr, RewriteTrace) {
    let mut trace = RewriteTrace::default();
    let out = rewrite_nodes(ctx, e, &mut trace, &mut pa_at);
    (out, trace)
}

/// Chooses a plan per fixpoint: P2 for homomorphic φ, repartitioned when a
/// preserved component exists and the aggregation permits it, P1 with a
/// warning otherwise.
pub fn apply_pdist(ctx: &Context, e: &Expr) -> (Vec<SiteDirective>, RewriteTrace) {
    let mut out = Vec::new();
    let mut trace = RewriteTrace::default();
    let mut scopes: BTreeMap<usize, Context> = BTreeMap::new();
    collect_site_contexts(ctx, e, &mut scopes);
    for (site, node) in fixpoint_sites(e).into_iter().enumerate() {
        let Expr::Fixpoint { delta, phi, .. } = node else {
            continue;
        };
        let here = scopes.get(&(node as *const Expr as usize));
        let lam = here.map(|c| c.resolve(phi)).unwrap_or(phi);
        let (plan, warning, reason) = if !is_syntactic_homomorphism(lam) {
            let w = String::from("φ is not a syntactic homomorphism; falling back to P1");
            (Plan::P1, Some(w.clone()), w)
        } else {
            let key = here.and_then(|c| {
                let t = infer(&c.scope, node).ok()?;
                let key = find_repartition_key(&c.scope, phi, &t)?;
                repartition_allowed(&Delta::from_aggregator(delta, &Env::new()), &key).then_some(key)
            });
            match key {
                Some(key) => {
                    let r = format!(
                        "homomorphic φ preserves {}; {} partitions stay disjoint",
                        format_path(&key),
                        delta.label()
                    );
                    (Plan::P2Repartitioned { key }, None, r)
                }
                None => (Plan::P2, None, String::from("homomorphic φ; no repartitioning key")),
            }
        };
        trace.push(
            Rule::PDist,
            Outcome::Planned,
            format!("site {site}: {plan}; {reason}"),
            node,
            node,
        );
        out.push(SiteDirective { site, plan, warning });
    }
    (out, trace)
}

fn collect_site_contexts(ctx: &Context, e: &Expr, out: &mut BTreeMap<usize, Context>) {
    match e {
        Expr::Lambda(_) => {}
        Expr::Let(x, b, body) => {
            collect_site_contexts(ctx, b, out);
            if let Ok(inner) = ctx.enter_let(x, b) {
                collect_site_contexts(&inner, body, out);
            }
        }
        _ => {
            if matches!(e, Expr::Fixpoint { .. }) {
                out.insert(e as *const Expr as usize, ctx.clone());
            }
            for c in e.children() {
                collect_site_contexts(ctx, c, out);
            }
        }
    }
}

fn retype(inputs: &TypeEnv, e: &Expr, rule: Rule) -> Result<(), OptimizeError> {
    typecheck(inputs, e)
        .map(|_| ())
        .map_err(|error| OptimizeError::Internal {
            rule: rule.name(),
            error,
        })
}

/// PF to a fixed point, then PJ, PA and P_dist, re-typechecking after each
/// rewrite. Returns the input unchanged when no rule applies.
pub fn optimize(inputs: &TypeEnv, e: &Expr) -> Result<Optimized, OptimizeError> {
    typecheck(inputs, e)?;
    let ctx = Context::new(inputs);
    let mut trace = RewriteTrace::default();
    let mut cur = inline_fixpoint_lets(e);
    let mut pf_trace = RewriteTrace::default();
    for _ in 0..8 {
        let (next, t) = rewrite_pf(&ctx, &cur);
        let fired = t.applied().count() > 0;
        retype(inputs, &next, Rule::PF)?;
        pf_trace = merge_pf(pf_trace, t);
        cur = next;
        if !fired {
            break;
        }
    }
    trace.extend(pf_trace);
    for (rule, pass) in [
        (Rule::PJ, rewrite_pj as fn(&Context, &Expr) -> (Expr, RewriteTrace)),
        (Rule::PA, rewrite_pa),
    ] {
        let (next, t) = pass(&ctx, &cur);
        retype(inputs, &next, rule)?;
        trace.extend(t);
        cur = next;
    }
    if trace.applied().count() == 0 {
        cur = e.clone();
    }
    let (directives, t) = apply_pdist(&ctx, &cur);
    trace.extend(t);
    Ok(Optimized {
        expr: cur,
        directives,
        trace,
    })
}

/// Keeps every application but only the last round's skip entries, so a
/// rule that stops firing is not reported once per round.
fn merge_pf(acc: RewriteTrace, round: RewriteTrace) -> RewriteTrace {
    let mut out: Vec<TraceEntry> = acc.0.into_iter().filter(|t| t.outcome == Outcome::Applied).collect();
    out.extend(round.0);
    RewriteTrace(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::name;
    use crate::syntax::{parse_expr, parse_program};

    const TC: &str = r"\X -> flatmap(\(mid, (src, dest)) -> {(src, dest)}, join(flatmap(\(a, b) -> {(b, a)}, X), R))";

    fn edges() -> TypeEnv {
        let mut env = TypeEnv::new();
        env.0.insert(
            name("R"),
            TypeExpr::dist(TypeExpr::pair(TypeExpr::int(), TypeExpr::int())),
        );
        env.0.insert(
            name("A"),
            TypeExpr::local(TypeExpr::pair(TypeExpr::int(), TypeExpr::string())),
        );
        env
    }

    #[test]
    fn homomorphism_grammar() {
        assert!(is_syntactic_homomorphism(&parse_expr(r"\X -> X").unwrap()));
        assert!(is_syntactic_homomorphism(&parse_expr(TC).unwrap()));
        assert!(!is_syntactic_homomorphism(&parse_expr(r"\X -> join(X, X)").unwrap()));
        assert!(!is_syntactic_homomorphism(&parse_expr(r"\(a, b) -> {a}").unwrap()));
        assert!(!is_syntactic_homomorphism(
            &parse_expr(r"\X -> flatmap(\x -> X, X)").unwrap()
        ));
    }

    #[test]
    fn pf_pushes_source_filters_only() {
        let src = format!("flatmap(\\(s, d) -> if s == 1 then {{(s, d)}} else {{}}, mu(R, {TC}))");
        let out = optimize(&edges(), &parse_expr(&src).unwrap()).unwrap();
        assert_eq!(out.trace.applied_rules(), [Rule::PF]);
        assert!(matches!(out.expr, Expr::Fixpoint { .. }));

        let dst = format!("flatmap(\\(s, d) -> if d == 7 then {{(s, d)}} else {{}}, mu(R, {TC}))");
        let out = optimize(&edges(), &parse_expr(&dst).unwrap()).unwrap();
        assert!(out.trace.applied_rules().is_empty());
        assert!(out.trace.0.iter().any(|t| t.reason == "condition (C) fails for d"));

        let both = format!("flatmap(\\(s, d) -> if s == 1 && d == 7 then {{(s, d)}} else {{}}, mu(R, {TC}))");
        let out = optimize(&edges(), &parse_expr(&both).unwrap()).unwrap();
        assert_eq!(out.trace.applied_rules(), [Rule::PF]);
        let Expr::Flatmap(f, inner) = &out.expr else {
            panic!("{}", out.expr)
        };
        assert_eq!(as_filter(f).unwrap().1.len(), 1);
        assert!(matches!(**inner, Expr::Fixpoint { .. }));
    }

    #[test]
    fn pj_and_idempotence() {
        let src = format!("join(A, mu(R, {TC}))");
        let e = parse_expr(&src).unwrap();
        let once = optimize(&edges(), &e).unwrap();
        assert_eq!(once.trace.applied_rules(), [Rule::PJ]);
        let twice = optimize(&edges(), &once.expr).unwrap();
        assert!(twice.trace.applied_rules().is_empty());
        assert_eq!(twice.expr, once.expr);
    }

    #[test]
    fn pa_needs_evidence() {
        let mut env = TypeEnv::new();
        env.0.insert(
            name("R"),
            parse_program("input R : Bag_d<((Int, Int), Int)>; R").unwrap().inputs[0]
                .ty
                .clone(),
        );
        let sp = r"\X -> flatmap(\(mid, ((src, w1), (dest, w2))) -> {((src, dest), w1 + w2)}, join(flatmap(\((s, d), w) -> {(d, (s, w))}, X), flatmap(\((s, d), w) -> {(s, (d, w))}, R)))";
        let annotated = parse_expr(&format!("reduceByKey(min, mu[identity](R, {sp})) @compatible")).unwrap();
        let out = optimize(&env, &annotated).unwrap();
        assert_eq!(out.trace.applied_rules(), [Rule::PA]);
        let Expr::Fixpoint { delta, .. } = &out.expr else {
            panic!()
        };
        assert_eq!(delta.label(), "minByKey");

        let bare = parse_expr(&format!("reduceByKey(min, mu(R, {sp}))")).unwrap();
        let out = optimize(&env, &bare).unwrap();
        assert!(out.trace.applied_rules().is_empty());
        assert!(out.trace.0.iter().any(|t| t.reason == "no compatibility evidence"));

        let sum = parse_expr(&format!("reduceByKey((+), mu[identity](R, {sp})) @compatible")).unwrap();
        let out = optimize(&env, &sum).unwrap();
        assert!(out.trace.applied_rules().is_empty(), "{}", out.trace);
    }

    #[test]
    fn pdist_plans() {
        let tc = optimize(&edges(), &parse_expr(&format!("mu(R, {TC})")).unwrap()).unwrap();
        assert!(matches!(tc.directives[0].plan, Plan::P2Repartitioned { .. }));
        let bad = optimize(
            &edges(),
            &parse_expr(r"mu(R, \X -> flatmap(\(a, (b, c)) -> {(b, c)}, join(X, X)))").unwrap(),
        )
        .unwrap();
        assert_eq!(bad.directives[0].plan, Plan::P1);
        assert!(bad.directives[0].warning.is_some());
    }
}
