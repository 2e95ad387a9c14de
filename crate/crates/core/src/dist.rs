//! Partitioned execution of fixpoints and the record-count transfer model.
//!
//! Sizes are record counts. With `N` partitions:
//! - a non-local `⊕_δ` merge over a bag `t` costs `N × |t|` (every partition
//!   has to see all of `t` to remove duplicates globally);
//! - bags that φ reads besides its iterate are copied to every other
//!   partition once, `(N − 1) × |A|`;
//! - a join or cogroup costs `|t1| + |t2|`, a group-by `|t|`.
//!
//! P1 runs one global loop and merges every iteration. P2 runs a local
//! fixpoint per partition and merges once. P2-repartitioned first moves
//! the seed so that a component preserved by φ is partition-local; the
//! per-partition results are then disjoint and a plain bag union finishes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;
use core::hash::Hasher;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::aggregation::Delta;
use crate::eval::{Env, EvalError, EvalLimits, Evaluator, FixpointRunner, Func, Val};
use crate::expr::Expr;
use crate::pattern::{format_path, Path};
use crate::typeck::{preserves, Scope};
use crate::types::{build_param_type, node_paths, TypeExpr};
use crate::value::{Bag, Name, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DistError {
    #[error("a partitioned bag needs at least one partition")]
    NoPartitions,
    #[error("element {value} has no component at {path}")]
    KeyPath { value: String, path: String },
    #[error("plan {plan} needs a homomorphic step function")]
    NotHomomorphic { plan: Plan },
    #[error("repartitioning on {path} is not valid for {delta}")]
    Repartition { path: String, delta: &'static str },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl From<DistError> for EvalError {
    fn from(e: DistError) -> Self {
        match e {
            DistError::Eval(e) => e,
            other => EvalError::Malformed(format!("{other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Partitioner {
    /// Instances shuffled with a seeded permutation, then dealt in turn.
    RoundRobin {
        seed: u64,
    },
    /// Elements go to `hash(component at path) mod p`.
    ByKeyHash {
        path: Path,
    },
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionedBag {
    pub partitions: Vec<Bag>,
    pub partitioner: Partitioner,
}

fn key_hash(v: &Value) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(format!("{v}").as_bytes());
    h.finish()
}

fn bucket(v: &Value, path: &Path, p: usize) -> Result<usize, DistError> {
    let k = v.at_path(path).ok_or_else(|| DistError::KeyPath {
        value: format!("{v}"),
        path: format_path(path),
    })?;
    Ok((key_hash(k) % p as u64) as usize)
}

impl PartitionedBag {
    pub fn partition(b: &Bag, p: usize, strategy: Partitioner) -> Result<Self, DistError> {
        if p == 0 {
            return Err(DistError::NoPartitions);
        }
        let mut partitions = alloc::vec![Bag::new(); p];
        match &strategy {
            Partitioner::RoundRobin { seed } => {
                let mut items: Vec<&Value> = b.instances().collect();
                items.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
                for (i, v) in items.into_iter().enumerate() {
                    partitions[i % p].insert(v.clone());
                }
            }
            Partitioner::ByKeyHash { path } => {
                for (v, n) in b.iter() {
                    partitions[bucket(v, path, p)?].insert_n(v.clone(), *n);
                }
            }
            Partitioner::Explicit => {
                partitions[0] = b.clone();
            }
        }
        Ok(PartitionedBag {
            partitions,
            partitioner: strategy,
        })
    }

    pub fn explicit(partitions: Vec<Bag>) -> Result<Self, DistError> {
        if partitions.is_empty() {
            return Err(DistError::NoPartitions);
        }
        Ok(PartitionedBag {
            partitions,
            partitioner: Partitioner::Explicit,
        })
    }

    pub fn count(&self) -> usize {
        self.partitions.len()
    }

    pub fn union(&self) -> Bag {
        let mut out = Bag::new();
        for b in &self.partitions {
            out.extend_from(b);
        }
        out
    }

    pub fn len(&self) -> u64 {
        self.partitions.iter().map(Bag::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Re-partitions by key, returning the new bag and the number of
    /// records that changed partition.
    pub fn repartition(&self, path: &Path) -> Result<(PartitionedBag, u64), DistError> {
        let p = self.count();
        let mut partitions = alloc::vec![Bag::new(); p];
        let mut moved = 0;
        for (i, b) in self.partitions.iter().enumerate() {
            for (v, n) in b.iter() {
                let j = bucket(v, path, p)?;
                if j != i {
                    moved += n;
                }
                partitions[j].insert_n(v.clone(), *n);
            }
        }
        Ok((
            PartitionedBag {
                partitions,
                partitioner: Partitioner::ByKeyHash { path: path.clone() },
            },
            moved,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Plan {
    P1,
    P2,
    P2Repartitioned { key: Path },
}

impl Plan {
    pub fn name(&self) -> &'static str {
        match self {
            Plan::P1 => "P1",
            Plan::P2 => "P2",
            Plan::P2Repartitioned { .. } => "P2-repartitioned",
        }
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Plan::P2Repartitioned { key } => write!(f, "P2-repartitioned on {}", format_path(key)),
            other => f.write_str(other.name()),
        }
    }
}

/// Records moved by one fixpoint execution.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransferReport {
    pub plan: String,
    pub partitions: u64,
    pub iterations: u64,
    pub records_shuffled: u64,
    /// Copies of the bags φ reads, plus any repartitioning of the seed.
    pub seed_distribution: u64,
    /// One entry per global iteration (P1 only).
    pub iteration_merges: Vec<u64>,
    pub final_merge: u64,
}

impl TransferReport {
    fn new(plan: &Plan, partitions: usize) -> Self {
        TransferReport {
            plan: String::from(plan.name()),
            partitions: partitions as u64,
            iterations: 0,
            records_shuffled: 0,
            seed_distribution: 0,
            iteration_merges: Vec::new(),
            final_merge: 0,
        }
    }

    fn total(mut self) -> Self {
        self.records_shuffled = self.seed_distribution + self.iteration_merges.iter().sum::<u64>() + self.final_merge;
        self
    }
}

impl fmt::Display for TransferReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "plan = \"{}\"", self.plan)?;
        writeln!(f, "partitions = {}", self.partitions)?;
        writeln!(f, "iterations = {}", self.iterations)?;
        writeln!(f, "records_shuffled = {}", self.records_shuffled)?;
        writeln!(f, "seed_distribution = {}", self.seed_distribution)?;
        writeln!(f, "iteration_merges = {}", self.iteration_merges.iter().sum::<u64>())?;
        writeln!(f, "final_merge = {}", self.final_merge)
    }
}

/// Runs independent per-partition tasks. Results come back in task order.
pub trait TaskPool: Sync {
    fn run_all(
        &self,
        tasks: usize,
        task: &(dyn Fn(usize) -> Result<LocalRun, EvalError> + Sync),
    ) -> Vec<Result<LocalRun, EvalError>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl TaskPool for Sequential {
    fn run_all(
        &self,
        tasks: usize,
        task: &(dyn Fn(usize) -> Result<LocalRun, EvalError> + Sync),
    ) -> Vec<Result<LocalRun, EvalError>> {
        (0..tasks).map(task).collect()
    }
}

/// The result of a fixpoint computed on one partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalRun {
    pub result: Bag,
    pub iterations: u64,
}

/// Whether φ, as a runtime function, is a lambda whose body passes the
/// syntactic homomorphism check.
pub fn is_homomorphic(phi: &Func) -> bool {
    match phi {
        Func::Closure(c) => crate::optimizer::is_syntactic_homomorphism(&Expr::Lambda(c.cases.clone())),
        Func::Builtin { .. } => false,
    }
}

/// Bags φ reads through its free variables, directly or through the
/// closures it calls.
pub fn referenced_bags(phi: &Func) -> BTreeMap<Name, u64> {
    let mut out = BTreeMap::new();
    let mut seen = BTreeSet::new();
    if let Func::Closure(c) = phi {
        collect_bags(&c.env, &Expr::Lambda(c.cases.clone()), &mut seen, &mut out);
    }
    out
}

fn collect_bags(env: &Env, e: &Expr, seen: &mut BTreeSet<Name>, out: &mut BTreeMap<Name, u64>) {
    for x in e.free_vars() {
        if !seen.insert(x.clone()) {
            continue;
        }
        match env.lookup(&x) {
            Some(Val::Data(Value::Bag(b))) => {
                out.insert(x, b.len());
            }
            Some(Val::Func(Func::Closure(c))) => collect_bags(&c.env, &Expr::Lambda(c.cases.clone()), seen, out),
            _ => {}
        }
    }
}

fn broadcast_cost(phi: &Func, n: usize) -> u64 {
    (n as u64 - 1) * referenced_bags(phi).values().sum::<u64>()
}

/// Cost of a non-local `⊕_δ` merge of `records` records.
fn merge_cost(delta: &Delta, n: usize, records: u64) -> u64 {
    match delta {
        Delta::Identity => 0,
        _ => n as u64 * records,
    }
}

/// Semi-naive iteration: φ is applied to the newly derived elements only.
/// Valid for homomorphic φ and δ that absorb duplicates; otherwise the
/// literal loop runs.
pub fn local_fixpoint(ev: &Evaluator<'_>, delta: &Delta, seed: Bag, phi: &Func) -> Result<LocalRun, EvalError> {
    if !delta.absorbs_duplicates() {
        let out = ev.fixpoint(delta, seed, phi, false)?;
        return Ok(LocalRun {
            result: out.result,
            iterations: out.iterations,
        });
    }
    let mut s = delta.apply(ev, seed)?;
    let mut frontier = s.clone();
    let mut iterations = 0;
    loop {
        if iterations == ev.limits.max_fixpoint_iterations {
            return Err(EvalError::IterationLimit { iterations });
        }
        let p = ev.apply_bag(phi, Value::Bag(frontier))?;
        iterations += 1;
        ev.check_size(&p)?;
        let next = delta.combine(ev, &s, &p)?;
        ev.check_size(&next)?;
        if next == s {
            return Ok(LocalRun { result: s, iterations });
        }
        frontier = next.set_difference(&s);
        s = next;
    }
}

fn deal(b: &Bag, n: usize) -> Vec<Bag> {
    let mut parts = alloc::vec![Bag::new(); n];
    for (i, v) in b.instances().enumerate() {
        parts[i % n].insert(v.clone());
    }
    parts
}

/// One global loop following the reference semantics; φ is applied
/// partition-wise when it is homomorphic, and each iteration's merge is
/// non-local.
pub fn run_p1(
    limits: EvalLimits,
    r: &PartitionedBag,
    delta: &Delta,
    phi: &Func,
) -> Result<(Bag, TransferReport), DistError> {
    let ev = Evaluator::new(limits);
    let n = r.count();
    let mut report = TransferReport::new(&Plan::P1, n);
    if r.is_empty() {
        return Ok((Bag::new(), report.total()));
    }
    report.seed_distribution = broadcast_cost(phi, n);
    let local = is_homomorphic(phi);
    let step = |x: &Bag| -> Result<Bag, EvalError> {
        if !local || n == 1 {
            return ev.apply_bag(phi, Value::Bag(x.clone()));
        }
        let mut out = Bag::new();
        for part in deal(x, n) {
            out.absorb(ev.apply_bag(phi, Value::Bag(part))?);
        }
        Ok(out)
    };
    let mut cur = delta.apply(&ev, r.union())?;
    let mut s = cur.clone();
    loop {
        if report.iterations == limits.max_fixpoint_iterations {
            return Err(EvalError::IterationLimit {
                iterations: report.iterations,
            }
            .into());
        }
        let p = step(&cur)?;
        report.iterations += 1;
        ev.check_size(&p)?;
        report.iteration_merges.push(merge_cost(delta, n, s.len() + p.len()));
        let next = delta.combine(&ev, &s, &p)?;
        ev.check_size(&next)?;
        if next == s {
            return Ok((s, report.total()));
        }
        cur = delta.apply(&ev, p)?;
        s = next;
    }
}

fn run_locals(
    limits: EvalLimits,
    parts: &[Bag],
    delta: &Delta,
    phi: &Func,
    pool: &dyn TaskPool,
) -> Result<Vec<LocalRun>, EvalError> {
    let task = |i: usize| local_fixpoint(&Evaluator::new(limits), delta, parts[i].clone(), phi);
    pool.run_all(parts.len(), &task).into_iter().collect()
}

/// A local fixpoint per partition followed by one non-local merge.
pub fn run_p2(
    limits: EvalLimits,
    r: &PartitionedBag,
    delta: &Delta,
    phi: &Func,
    pool: &dyn TaskPool,
) -> Result<(Bag, TransferReport), DistError> {
    if !is_homomorphic(phi) {
        return Err(DistError::NotHomomorphic { plan: Plan::P2 });
    }
    let ev = Evaluator::new(limits);
    let n = r.count();
    let mut report = TransferReport::new(&Plan::P2, n);
    if r.is_empty() {
        return Ok((Bag::new(), report.total()));
    }
    report.seed_distribution = broadcast_cost(phi, n);
    let runs = run_locals(limits, &r.partitions, delta, phi, pool)?;
    report.iterations = runs.iter().map(|l| l.iterations).max().unwrap_or(0);
    let mut out = Bag::new();
    let mut records = 0;
    for l in runs {
        records += l.result.len();
        out = delta.combine(&ev, &out, &l.result)?;
    }
    if n > 1 {
        report.final_merge = merge_cost(delta, n, records);
    }
    Ok((out, report.total()))
}

/// Whether partitioning by `key` keeps every `δ` group inside one partition.
pub fn repartition_allowed(delta: &Delta, key: &Path) -> bool {
    match delta {
        Delta::Distinct => true,
        Delta::ByKey { value_path, .. } => !key.starts_with(value_path) && !value_path.starts_with(key),
        Delta::Identity | Delta::Filter { .. } => false,
    }
}

/// P2 after moving the seed so that equal `key` components share a
/// partition. The local results must be pairwise disjoint; they are joined
/// with a plain bag union.
pub fn run_p2_repartitioned(
    limits: EvalLimits,
    r: &PartitionedBag,
    delta: &Delta,
    phi: &Func,
    key: &Path,
    pool: &dyn TaskPool,
) -> Result<(Bag, TransferReport), DistError> {
    let plan = Plan::P2Repartitioned { key: key.clone() };
    if !is_homomorphic(phi) {
        return Err(DistError::NotHomomorphic { plan });
    }
    if !repartition_allowed(delta, key) {
        return Err(DistError::Repartition {
            path: format_path(key),
            delta: delta.label(),
        });
    }
    let ev = Evaluator::new(limits);
    let n = r.count();
    let mut report = TransferReport::new(&plan, n);
    if r.is_empty() {
        return Ok((Bag::new(), report.total()));
    }
    let (parts, moved) = r.repartition(key)?;
    report.seed_distribution = broadcast_cost(phi, n) + moved;
    let runs = run_locals(limits, &parts.partitions, delta, phi, pool)?;
    report.iterations = runs.iter().map(|l| l.iterations).max().unwrap_or(0);
    let mut out = Bag::new();
    for l in &runs {
        if !out.is_disjoint(&l.result) {
            return Err(EvalError::Soundness(format!(
                "partition results overlap after repartitioning on {}",
                format_path(key)
            ))
            .into());
        }
        out.extend_from(&l.result);
    }
    if delta.apply(&ev, out.clone())? != out {
        return Err(EvalError::Soundness(String::from(
            "union of partition results is not closed under the aggregation",
        ))
        .into());
    }
    Ok((out, report.total()))
}

/// The first node of the element type, root first, whose replacement by an
/// opaque type φ preserves: every output element then carries the same
/// component as the input element it came from.
pub fn find_repartition_key(scope: &Scope, phi: &Expr, input_bag: &TypeExpr) -> Option<Path> {
    let elem = input_bag.bag_elem()?;
    node_paths(elem).into_iter().find(|path| {
        build_param_type(elem, path, 0)
            .map(|probe| preserves(scope, phi, input_bag, &probe))
            .unwrap_or(false)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeCharge {
    pub operator: &'static str,
    pub records: u64,
}

/// Transfer charges of the non-local operators in a term.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShapeCost {
    pub charges: Vec<ShapeCharge>,
}

impl ShapeCost {
    pub fn total(&self) -> u64 {
        self.charges.iter().map(|c| c.records).sum()
    }

    fn charge(&mut self, operator: &'static str, records: u64) {
        self.charges.push(ShapeCharge { operator, records });
    }
}

/// Evaluates `e` and charges each join, cogroup, group-by, distinct and
/// fixpoint (run as P1) on the way. Lambda bodies are not inspected.
pub fn account_join_shapes(ev: &Evaluator<'_>, env: &Env, e: &Expr, n: usize) -> Result<ShapeCost, EvalError> {
    let mut cost = ShapeCost::default();
    shapes(ev, env, e, n as u64, &mut cost)?;
    Ok(cost)
}

fn shapes(ev: &Evaluator<'_>, env: &Env, e: &Expr, n: u64, cost: &mut ShapeCost) -> Result<Val, EvalError> {
    let bag = |v: Val| v.into_bag();
    Ok(match e {
        Expr::Join(a, b) | Expr::Cogroup(a, b) => {
            let x = bag(shapes(ev, env, a, n, cost)?)?;
            let y = bag(shapes(ev, env, b, n, cost)?)?;
            let (name, out) = if matches!(e, Expr::Join(..)) {
                ("join", crate::eval::join(&x, &y)?)
            } else {
                ("cogroup", crate::eval::cogroup(&x, &y)?)
            };
            cost.charge(name, x.len() + y.len());
            Val::Data(Value::Bag(out))
        }
        Expr::Flatmap(f, src) => {
            let f = ev.eval(env, f)?.into_func()?;
            let src = bag(shapes(ev, env, src, n, cost)?)?;
            Val::Data(Value::Bag(crate::eval::flatmap(&src, &mut |v| {
                ev.apply_bag(&f, v.clone())
            })?))
        }
        Expr::ReduceByKey { op, src, .. } => {
            let op = ev.eval(env, op)?.into_func()?;
            let src = bag(shapes(ev, env, src, n, cost)?)?;
            cost.charge("groupBy", src.len());
            Val::Data(Value::Bag(crate::eval::reduce_by_key(&src, &mut |a, b| {
                ev.apply2(&op, a, b)
            })?))
        }
        Expr::Aggregate(agg, inner) => {
            let delta = Delta::from_aggregator(agg, env);
            let x = bag(shapes(ev, env, inner, n, cost)?)?;
            match delta {
                Delta::Distinct => cost.charge("distinct", n * x.len()),
                Delta::ByKey { .. } => cost.charge("groupBy", x.len()),
                Delta::Identity | Delta::Filter { .. } => {}
            }
            Val::Data(Value::Bag(delta.apply(ev, x)?))
        }
        Expr::Fixpoint { delta, seed, phi } => {
            let delta = Delta::from_aggregator(delta, env);
            let seed = bag(shapes(ev, env, seed, n, cost)?)?;
            let phi = ev.eval(env, phi)?.into_func()?;
            let out = ev.plain().fixpoint(&delta, seed, &phi, false)?.result;
            cost.charge("fixpoint", n * out.len());
            Val::Data(Value::Bag(out))
        }
        Expr::Dist(inner) => shapes(ev, env, inner, n, cost)?,
        Expr::Let(x, bound, body) => {
            let v = shapes(ev, env, bound, n, cost)?;
            shapes(ev, &env.with(x.clone(), v), body, n, cost)?
        }
        other => ev.eval(env, other)?,
    })
}

/// How the simulator picks a plan for a fixpoint site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanChoice {
    /// P1 everywhere.
    P1,
    /// P2 wherever φ is homomorphic, P1 elsewhere.
    P2,
    /// The per-site directive, P1 for sites without one.
    Directed(BTreeMap<usize, Plan>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteReport {
    /// Preorder index of the fixpoint among the program's fixpoint nodes.
    pub site: usize,
    pub report: TransferReport,
}

/// A [`FixpointRunner`] that executes every fixpoint of one program on a
/// simulated cluster and keeps the transfer reports.
pub struct Simulator<'a> {
    pub partitions: usize,
    pub seed: u64,
    choice: PlanChoice,
    sites: BTreeMap<usize, usize>,
    pool: &'a dyn TaskPool,
    reports: RefCell<Vec<SiteReport>>,
}

/// Fixpoint nodes of `e` in preorder.
pub fn fixpoint_sites(e: &Expr) -> Vec<&Expr> {
    let mut out = Vec::new();
    e.walk(&mut |x| {
        if matches!(x, Expr::Fixpoint { .. }) {
            out.push(x);
        }
    });
    out
}

impl<'a> Simulator<'a> {
    /// `program` must be the very term later handed to the evaluator:
    /// sites are recognized by address.
    pub fn new(
        program: &Expr,
        partitions: usize,
        seed: u64,
        choice: PlanChoice,
        pool: &'a dyn TaskPool,
    ) -> Result<Self, DistError> {
        if partitions == 0 {
            return Err(DistError::NoPartitions);
        }
        let sites = fixpoint_sites(program)
            .into_iter()
            .enumerate()
            .map(|(i, x)| (x as *const Expr as usize, i))
            .collect();
        Ok(Simulator {
            partitions,
            seed,
            choice,
            sites,
            pool,
            reports: RefCell::new(Vec::new()),
        })
    }

    pub fn reports(&self) -> Vec<SiteReport> {
        self.reports.borrow().clone()
    }

    pub fn total_shuffled(&self) -> u64 {
        self.reports.borrow().iter().map(|r| r.report.records_shuffled).sum()
    }

    fn plan_for(&self, site: usize, phi: &Func) -> Plan {
        match &self.choice {
            PlanChoice::P1 => Plan::P1,
            PlanChoice::P2 if is_homomorphic(phi) => Plan::P2,
            PlanChoice::P2 => Plan::P1,
            PlanChoice::Directed(d) => d.get(&site).cloned().unwrap_or(Plan::P1),
        }
    }
}

impl FixpointRunner for Simulator<'_> {
    fn run(&self, ev: &Evaluator<'_>, site: &Expr, delta: &Delta, seed: Bag, phi: &Func) -> Result<Bag, EvalError> {
        let idx = self
            .sites
            .get(&(site as *const Expr as usize))
            .copied()
            .unwrap_or(usize::MAX);
        let r = PartitionedBag::partition(&seed, self.partitions, Partitioner::RoundRobin { seed: self.seed })?;
        let limits = ev.limits;
        let (out, report) = match self.plan_for(idx, phi) {
            Plan::P1 => run_p1(limits, &r, delta, phi)?,
            Plan::P2 => run_p2(limits, &r, delta, phi, self.pool)?,
            Plan::P2Repartitioned { key } => run_p2_repartitioned(limits, &r, delta, phi, &key, self.pool)?,
        };
        self.reports.borrow_mut().push(SiteReport { site: idx, report });
        Ok(out)
    }
}
