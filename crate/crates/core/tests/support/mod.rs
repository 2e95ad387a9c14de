//! Oracles and fixtures shared by the integration suites of both crates.
#![allow(dead_code)]

pub mod instances;

use std::collections::{BTreeMap, BTreeSet};

use mumonoids_core::eval::{Env, Func};
use mumonoids_core::{parse_expr, Bag, Evaluator, Value};

pub const TC_PHI: &str =
    r"\X -> flatmap(\(mid, (src, dest)) -> {(src, dest)}, join(flatmap(\(a, b) -> {(b, a)}, X), R))";

pub const SP_PHI: &str = r"\X -> flatmap(\(mid, ((src, w1), (dest, w2))) -> {((src, dest), w1 + w2)}, join(flatmap(\((src, dest), w) -> {(dest, (src, w))}, X), flatmap(\((src, dest), w) -> {(src, (dest, w))}, R)))";

pub const FLIGHTS_PHI: &str = r"\X -> flatmap(\(corr, (Flight(dtime1, atime1, dep1, dest1, dur1), Flight(dtime2, atime2, dep2, dest2, dur2))) -> if atime1 < dtime2 then {Flight(dtime1, atime2, dep1, dest2, dur1 + dur2)} else {}, join(flatmap(\Flight(dtime, atime, dep, dest, dur) -> {(dest, Flight(dtime, atime, dep, dest, dur))}, X), flatmap(\Flight(dtime, atime, dep, dest, dur) -> {(dep, Flight(dtime, atime, dep, dest, dur))}, R)))";

pub fn env_r(r: &Bag) -> Env {
    Env::new().with_value("R", Value::Bag(r.clone()))
}

/// The step function `src` closed over `env`.
pub fn phi(src: &str, env: &Env) -> Func {
    Evaluator::default()
        .eval(env, &parse_expr(src).expect("fixture parses"))
        .expect("fixture evaluates")
        .into_func()
        .expect("fixture is a function")
}

/// Pairs reachable by a path of length at least one.
pub fn warshall(edges: &[(i64, i64)]) -> BTreeSet<(i64, i64)> {
    let nodes: Vec<i64> = edges
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let at = |v: i64| nodes.binary_search(&v).expect("node listed");
    let n = nodes.len();
    let mut reach = vec![vec![false; n]; n];
    for &(a, b) in edges {
        reach[at(a)][at(b)] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                let via = reach[k].clone();
                for (to, &r) in reach[i].iter_mut().zip(&via) {
                    *to |= r;
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if reach[i][j] {
                out.insert((nodes[i], nodes[j]));
            }
        }
    }
    out
}

/// Least total weight over paths of length at least one; weights are
/// non-negative.
pub fn floyd_warshall(edges: &[((i64, i64), i64)]) -> BTreeMap<(i64, i64), i64> {
    let nodes: Vec<i64> = edges
        .iter()
        .flat_map(|&((a, b), _)| [a, b])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let at = |v: i64| nodes.binary_search(&v).expect("node listed");
    let n = nodes.len();
    let mut dist: Vec<Vec<Option<i64>>> = vec![vec![None; n]; n];
    for &((a, b), w) in edges {
        let d = &mut dist[at(a)][at(b)];
        *d = Some(d.map_or(w, |x| x.min(w)));
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(x), Some(y)) = (dist[i][k], dist[k][j]) {
                    if dist[i][j].is_none_or(|d| x + y < d) {
                        dist[i][j] = Some(x + y);
                    }
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            if let Some(d) = dist[i][j] {
                out.insert((nodes[i], nodes[j]), d);
            }
        }
    }
    out
}

/// Every non-empty word over `letters` without a repeated letter.
pub fn words(letters: &[&str]) -> BTreeSet<String> {
    fn extend(prefix: String, used: &mut Vec<bool>, letters: &[&str], out: &mut BTreeSet<String>) {
        for i in 0..letters.len() {
            if !used[i] {
                used[i] = true;
                let w = format!("{prefix}{}", letters[i]);
                out.insert(w.clone());
                extend(w, used, letters, out);
                used[i] = false;
            }
        }
    }
    let mut out = BTreeSet::new();
    extend(String::new(), &mut vec![false; letters.len()], letters, &mut out);
    out
}

fn int(v: &Value) -> i64 {
    v.as_int().expect("integer component")
}

pub fn pairs(b: &Bag) -> BTreeSet<(i64, i64)> {
    b.elements()
        .map(|v| {
            let (a, b) = v.as_pair().expect("pair element");
            (int(a), int(b))
        })
        .collect()
}

/// `((src, dst), w)` elements as a map; panics on a repeated key.
pub fn distances(b: &Bag) -> BTreeMap<(i64, i64), i64> {
    let mut out = BTreeMap::new();
    for v in b.instances() {
        let (e, w) = v.as_pair().expect("pair element");
        let (a, b) = e.as_pair().expect("edge");
        assert!(out.insert((int(a), int(b)), int(w)).is_none(), "repeated key in {v}");
    }
    out
}

/// Random DAG: edges only go from smaller to larger ids.
pub fn acyclic(edges: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    let mut out: Vec<_> = edges
        .into_iter()
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub const WORDS_PHI: &str = r"\X -> flatmap(\x -> flatmap(\c -> if contains x c then {} else {x + c}, C), X)";

pub const TC_PROGRAM: &str = include_str!("../../../mumonoids/programs/tc.mm");
pub const SP_PROGRAM: &str = include_str!("../../../mumonoids/programs/sp.mm");

pub fn letters(ls: &[&str]) -> Bag {
    ls.iter().map(|l| Value::str(l)).collect()
}

pub fn program(src: &str) -> mumonoids_core::Program {
    mumonoids_core::parse_program(src).expect("fixture program parses")
}

pub fn edge_type() -> mumonoids_core::TypeExpr {
    mumonoids_core::parse_type("Bag_d<(Int, Int)>").unwrap()
}

pub fn weighted_type() -> mumonoids_core::TypeExpr {
    mumonoids_core::parse_type("Bag_d<((Int, Int), Int)>").unwrap()
}

/// Agreement between the typing check for condition (C) and sampling.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct COracle {
    pub checks: usize,
    pub type_says_preserved: usize,
    /// The type check said "preserved" but a sample moved the component.
    pub contradictions: usize,
}

/// For each step function and each component of its element type, checks
/// the typing verdict against `samples` random `(R, X)` pairs: a preserved
/// component of every output element must occur in the input bag.
pub fn condition_c_oracle(samples: usize, seed: u64) -> COracle {
    use mumonoids_core::sample::Sampler;
    use mumonoids_core::typeck::{check_condition_c, Scope};
    use mumonoids_core::types::TypeEnv;
    use mumonoids_core::{parse_type, Pattern};

    let fixtures = [
        (TC_PHI, "Bag_d<(Int, Int)>", "(s, d)"),
        (SP_PHI, "Bag_d<((Int, Int), Int)>", "((s, d), w)"),
        (
            FLIGHTS_PHI,
            "Bag_d<Flight(Int, Int, Int, Int, Int)>",
            "Flight(dt, at, dep, dest, dur)",
        ),
    ];
    let mut out = COracle::default();
    for (i, (src, ty, pat)) in fixtures.into_iter().enumerate() {
        let bag_t = parse_type(ty).unwrap();
        let elem_t = bag_t.bag_elem().unwrap().clone();
        let mut types = TypeEnv::new();
        types.0.insert("R".into(), bag_t.clone());
        let scope = Scope::from_env(&types);
        let phi_e = parse_expr(src).unwrap();
        let pattern: Pattern = mumonoids_core::parse_pattern(pat).unwrap();
        for var in pattern.vars() {
            out.checks += 1;
            let preserved = check_condition_c(&scope, &phi_e, &bag_t, &pattern, &var).unwrap();
            if !preserved {
                continue;
            }
            out.type_says_preserved += 1;
            let path = pattern.path_to(&var).unwrap();
            let mut s = Sampler::new(seed ^ (i as u64) << 8);
            for _ in 0..samples {
                let r = s.bag(&elem_t);
                let x = s.bag(&elem_t);
                let f = phi(src, &env_r(&r));
                let y = Evaluator::default().apply_bag(&f, Value::Bag(x.clone())).unwrap();
                let seen: BTreeSet<&Value> = x.elements().filter_map(|v| v.at_path(&path)).collect();
                if y.elements().any(|v| v.at_path(&path).is_none_or(|c| !seen.contains(c))) {
                    out.contradictions += 1;
                    break;
                }
            }
        }
    }
    out
}

pub const PROGRAMS: [(&str, &str); 7] = [
    ("TC", TC_PROGRAM),
    ("SP", SP_PROGRAM),
    ("TC-filter", include_str!("../../../mumonoids/programs/tc_filter.mm")),
    ("SP-filter", include_str!("../../../mumonoids/programs/sp_filter.mm")),
    ("Flights", include_str!("../../../mumonoids/programs/flights.mm")),
    (
        "PathPlanning",
        include_str!("../../../mumonoids/programs/path_planning.mm"),
    ),
    ("MovieRec", include_str!("../../../mumonoids/programs/movie_rec.mm")),
];
