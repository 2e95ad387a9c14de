//! Seeded, type-directed generation of small values and bags, plus random
//! graphs and splits used by the probes and the property suites.

use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::types::TypeExpr;
use crate::value::{Bag, Value};

/// Strings drawn for `String`-typed positions. Includes the city names the
/// path-planning program filters on.
pub const STRING_POOL: [&str; 6] = ["a", "b", "c", "Paris", "Geneva", "Lyon"];

#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
    /// Integers are drawn from `0..int_bound`; a small range makes joins hit.
    pub int_bound: i64,
    pub max_bag: usize,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            int_bound: 5,
            max_bag: 5,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A value of type `t`, or `None` when `t` is uninhabited or not data
    /// (functions, the empty sum). Rigid positions receive integers.
    pub fn value(&mut self, t: &TypeExpr) -> Option<Value> {
        self.value_at(t, 3)
    }

    fn value_at(&mut self, t: &TypeExpr, depth: u32) -> Option<Value> {
        match t {
            TypeExpr::Basic(n) => Some(match &**n {
                "Int" => Value::Int(self.rng.random_range(0..self.int_bound)),
                "Float" => Value::float(f64::from(self.rng.random_range(0..10u8)) / 2.0),
                _ => Value::str(STRING_POOL.choose(&mut self.rng).expect("nonempty pool")),
            }),
            TypeExpr::Rigid(_) => Some(Value::Int(self.rng.random_range(0..self.int_bound))),
            TypeExpr::Sum(cases) => {
                let inhabited: Vec<_> = cases.iter().filter(|c| c.params.iter().all(|p| !p.is_void())).collect();
                let case = *inhabited.choose(&mut self.rng)?;
                let args = case
                    .params
                    .iter()
                    .map(|p| self.value_at(p, depth))
                    .collect::<Option<Vec<_>>>()?;
                Some(Value::Constructed(case.ctor.clone(), args.into()))
            }
            TypeExpr::LocalBag(e) | TypeExpr::DistBag(e) => {
                let cap = if depth == 0 { 0 } else { self.max_bag };
                Some(Value::Bag(self.bag_at(e, cap, depth.saturating_sub(1))))
            }
            TypeExpr::Func(..) => None,
        }
    }

    /// A bag of up to `max_bag` elements of type `elem`.
    pub fn bag(&mut self, elem: &TypeExpr) -> Bag {
        self.bag_at(elem, self.max_bag, 2)
    }

    fn bag_at(&mut self, elem: &TypeExpr, cap: usize, depth: u32) -> Bag {
        let n = self.rng.random_range(0..=cap);
        (0..n).filter_map(|_| self.value_at(elem, depth)).collect()
    }

    /// An endless stream of sample bags.
    pub fn bags<'a>(&'a mut self, elem: &'a TypeExpr) -> impl Iterator<Item = Bag> + 'a {
        core::iter::repeat_with(move || self.bag(elem))
    }

    /// Splits `b` in two, sending every element instance left or right.
    pub fn split(&mut self, b: &Bag) -> (Bag, Bag) {
        let (mut l, mut r) = (Bag::new(), Bag::new());
        for v in b.instances() {
            if self.rng.random_bool(0.5) {
                l.insert(v.clone());
            } else {
                r.insert(v.clone());
            }
        }
        (l, r)
    }

    /// Directed graph on `0..nodes` without self-loops; each ordered pair is
    /// an edge with probability `p`.
    pub fn graph(&mut self, nodes: i64, p: f64) -> Vec<(i64, i64)> {
        let mut edges = Vec::new();
        for a in 0..nodes {
            for b in 0..nodes {
                if a != b && self.rng.random_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        edges
    }

    /// Integer weights uniform in `0..=5`.
    pub fn weights(&mut self, edges: &[(i64, i64)]) -> Vec<((i64, i64), i64)> {
        edges.iter().map(|&e| (e, self.rng.random_range(0..=5))).collect()
    }
}

/// `{(a, b)}` for a list of edges.
pub fn edge_bag(edges: &[(i64, i64)]) -> Bag {
    edges
        .iter()
        .map(|&(a, b)| Value::pair(Value::Int(a), Value::Int(b)))
        .collect()
}

/// `{((a, b), w)}` for weighted edges.
pub fn weighted_edge_bag(edges: &[((i64, i64), i64)]) -> Bag {
    edges
        .iter()
        .map(|&((a, b), w)| Value::pair(Value::pair(Value::Int(a), Value::Int(b)), Value::Int(w)))
        .collect()
}
