//! Seeded rewrite instances: a term whose rewrite is expected to fire, its
//! input types and a matching input environment.

use mumonoids_core::eval::Env;
use mumonoids_core::sample::{edge_bag, weighted_edge_bag, Sampler};
use mumonoids_core::types::TypeEnv;
use mumonoids_core::{parse_expr, parse_type, Bag, Expr, Value};
use rand::seq::IndexedRandom;
use rand::Rng;

use super::{acyclic, FLIGHTS_PHI, SP_PHI, TC_PHI};

pub struct Instance {
    pub label: String,
    pub types: TypeEnv,
    pub term: Expr,
    pub env: Env,
}

fn types(decls: &[(&str, &str)]) -> TypeEnv {
    let mut env = TypeEnv::new();
    for (x, t) in decls {
        env.0.insert((*x).into(), parse_type(t).expect("fixture type"));
    }
    env
}

fn flights(s: &mut Sampler, nodes: i64) -> Bag {
    let es = s.graph(nodes, 0.3);
    es.into_iter()
        .map(|(a, b)| {
            let dtime = s.rng().random_range(0..12i64);
            let dur = s.rng().random_range(1..=4i64);
            Value::constructed(
                "Flight",
                vec![
                    Value::Int(dtime),
                    Value::Int(dtime + dur),
                    Value::Int(a),
                    Value::Int(b),
                    Value::Int(dur),
                ],
            )
        })
        .collect()
}

fn dag(s: &mut Sampler, nodes: i64) -> Vec<((i64, i64), i64)> {
    let es = acyclic(s.graph(nodes, 0.3));
    s.weights(&es)
}

const OPS: [&str; 5] = ["==", "<", "<=", ">", "!="];

fn atom(s: &mut Sampler, vars: &[&str], bound: i64) -> String {
    let x = vars.choose(s.rng()).expect("vars");
    let op = OPS.choose(s.rng()).expect("ops");
    format!("{x} {op} {}", s.rng().random_range(0..bound))
}

/// A filter over a distinct fixpoint whose condition mentions at least one
/// component φ preserves.
pub fn pf(seed: u64) -> Instance {
    let mut s = Sampler::new(seed);
    let nodes = s.rng().random_range(4..9i64);
    let (label, pat, elem, preserved, other, mu, r, ty) = match seed % 3 {
        0 => (
            "TC",
            "(s, d)",
            "(s, d)",
            &["s"][..],
            &["d"][..],
            TC_PHI,
            Value::Bag(edge_bag(&s.graph(nodes, 0.3))),
            "Bag_d<(Int, Int)>",
        ),
        1 => (
            "SP",
            "((s, d), w)",
            "((s, d), w)",
            &["s"][..],
            &["d", "w"][..],
            SP_PHI,
            Value::Bag(weighted_edge_bag(&dag(&mut s, nodes))),
            "Bag_d<((Int, Int), Int)>",
        ),
        _ => (
            "Flights",
            "Flight(dt, at, dep, dest, dur)",
            "Flight(dt, at, dep, dest, dur)",
            &["dt", "dep"][..],
            &["at", "dest", "dur"][..],
            FLIGHTS_PHI,
            Value::Bag(flights(&mut s, nodes)),
            "Bag_d<Flight(Int, Int, Int, Int, Int)>",
        ),
    };
    let mut conds = vec![atom(&mut s, preserved, nodes)];
    if s.rng().random_bool(0.5) {
        let pool = if s.rng().random_bool(0.5) { other } else { preserved };
        conds.push(atom(&mut s, pool, nodes));
    }
    let cond = conds.join(" && ");
    let src = format!("flatmap(\\{pat} -> if {cond} then {{{elem}}} else {{}}, mu(R, {mu}))");
    Instance {
        label: format!("{label}: {cond}"),
        types: types(&[("R", ty)]),
        term: parse_expr(&src).expect("instance parses"),
        env: Env::new().with_value("R", r),
    }
}

/// `join(A, μ)` or `join(μ, A)` over the transitive closure.
pub fn pj(seed: u64) -> Instance {
    let mut s = Sampler::new(seed);
    let nodes = s.rng().random_range(4..9i64);
    let r = edge_bag(&s.graph(nodes, 0.3));
    let a: Bag = (0..s.rng().random_range(0..6))
        .map(|_| {
            let k = s.rng().random_range(0..nodes);
            Value::pair(Value::Int(k), Value::Int(s.rng().random_range(0..100)))
        })
        .collect();
    let mu = format!("mu(R, {TC_PHI})");
    let (label, src) = if seed.is_multiple_of(2) {
        ("join(A, mu)", format!("join(A, {mu})"))
    } else {
        ("join(mu, A)", format!("join({mu}, A)"))
    };
    Instance {
        label: label.to_string(),
        types: types(&[("R", "Bag_d<(Int, Int)>"), ("A", "Bag_l<(Int, Int)>")]),
        term: parse_expr(&src).expect("instance parses"),
        env: Env::new().with_value("R", Value::Bag(r)).with_value("A", Value::Bag(a)),
    }
}

/// An aggregation applied to a fixpoint, on acyclic inputs so the
/// unrewritten term terminates.
pub fn pa(seed: u64) -> Instance {
    let mut s = Sampler::new(seed);
    let nodes = s.rng().random_range(4..9i64);
    let weighted = Value::Bag(weighted_edge_bag(&dag(&mut s, nodes)));
    let sp = |agg: &str| format!("{agg}(mu[identity](R, {SP_PHI}))");
    let (label, src, r, ty) = match seed % 4 {
        0 => (
            "reduceByKey(min, mu[identity])",
            format!("reduceByKey(min, mu[identity](R, {SP_PHI})) @compatible"),
            weighted,
            "Bag_d<((Int, Int), Int)>",
        ),
        1 => (
            "reduceByKey(max, mu)",
            format!("reduceByKey(max, mu(R, {SP_PHI})) @compatible"),
            weighted,
            "Bag_d<((Int, Int), Int)>",
        ),
        2 => (
            "aggregate[minByKey]",
            sp("aggregate[minByKey((k, v)) @compatible]"),
            weighted,
            "Bag_d<((Int, Int), Int)>",
        ),
        _ => (
            "distinct(mu[identity])",
            format!("distinct(mu[identity](R, {TC_PHI}))"),
            Value::Bag(edge_bag(&acyclic(s.graph(nodes, 0.3)))),
            "Bag_d<(Int, Int)>",
        ),
    };
    Instance {
        label: label.to_string(),
        types: types(&[("R", ty)]),
        term: parse_expr(&src).expect("instance parses"),
        env: Env::new().with_value("R", r),
    }
}
