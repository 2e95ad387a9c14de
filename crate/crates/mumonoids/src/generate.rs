//! Seeded synthetic datasets.
//!
//! Everything derives from a directed Erdős–Rényi graph `G(n, p)` on nodes
//! `0..n` without self-loops:
//! - weighted edges carry an integer weight uniform in `0..=5`;
//! - flights put one flight on each edge, departing uniformly in `0..48`
//!   with a duration uniform in `1..=6`;
//! - routes orient every edge from the smaller to the larger node id, so
//!   the route graph is acyclic. Node 0 is `"Paris"`, node `n-1` is
//!   `"Geneva"`, node `i` otherwise `"c<i>"`. Each city has `0..=10`
//!   landmarks rated uniformly in `0..=5`;
//! - users: `n` users, each liking `0..=15` distinct movies out of `0..n`,
//!   and a start set of up to 3 movies. `p` is unused.

use mumonoids_core::{Bag, Value};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

pub use mumonoids_core::sample::{edge_bag, weighted_edge_bag};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("a graph needs at least one node")]
    NoNodes,
    #[error("edge probability {0} is outside [0, 1]")]
    Probability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphSpec {
    n: u64,
    p: f64,
    seed: u64,
}

impl GraphSpec {
    pub fn new(n: u64, p: f64, seed: u64) -> Result<Self, GenError> {
        if n == 0 {
            return Err(GenError::NoNodes);
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(GenError::Probability(p));
        }
        Ok(GraphSpec { n, p, seed })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Directed edges of `G(n, p)`, in lexicographic order. Gaps between
/// consecutive edges among the `n(n-1)` candidate slots are geometric, so
/// the cost is proportional to the number of edges.
pub fn erdos_renyi(g: GraphSpec) -> Vec<(i64, i64)> {
    let n = g.n;
    let slots = n * (n - 1);
    if g.p == 0.0 || slots == 0 {
        return Vec::new();
    }
    let mut rng = g.rng(0);
    let gap = Geometric::new(g.p).expect("probability validated");
    let mut edges = Vec::new();
    let mut k = gap.sample(&mut rng);
    while k < slots {
        let a = k / (n - 1);
        let r = k % (n - 1);
        let b = if r >= a { r + 1 } else { r };
        edges.push((a as i64, b as i64));
        k = k.saturating_add(1).saturating_add(gap.sample(&mut rng));
    }
    edges
}

pub fn weighted_erdos_renyi(g: GraphSpec) -> Vec<((i64, i64), i64)> {
    let mut rng = g.rng(1);
    erdos_renyi(g)
        .into_iter()
        .map(|e| (e, rng.random_range(0..=5)))
        .collect()
}

/// `Flight(dtime, atime, dep, dest, dur)` per edge.
pub fn flights(g: GraphSpec) -> Bag {
    let mut rng = g.rng(2);
    erdos_renyi(g)
        .into_iter()
        .map(|(a, b)| {
            let dtime: i64 = rng.random_range(0..48);
            let dur: i64 = rng.random_range(1..=6);
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

pub fn city_name(i: u64, n: u64) -> String {
    match i {
        0 => "Paris".to_string(),
        i if i + 1 == n => "Geneva".to_string(),
        i => format!("c{i}"),
    }
}

/// `(City(name, landmarks), City(name, landmarks))` per route, acyclic.
pub fn routes(g: GraphSpec) -> Bag {
    let mut rng = g.rng(3);
    let cities: Vec<Value> = (0..g.n)
        .map(|i| {
            let count = rng.random_range(0..=10);
            let landmarks: Bag = (0..count)
                .map(|j| {
                    Value::constructed(
                        "Landmark",
                        vec![Value::str(&format!("l{i}_{j}")), Value::Int(rng.random_range(0..=5))],
                    )
                })
                .collect();
            Value::constructed("City", vec![Value::str(&city_name(i, g.n)), Value::Bag(landmarks)])
        })
        .collect();
    let mut pairs: Vec<(i64, i64)> = erdos_renyi(g).into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
        .into_iter()
        .map(|(a, b)| Value::pair(cities[a as usize].clone(), cities[b as usize].clone()))
        .collect()
}

/// `User(id, movies)` for `n` users, and the start set.
pub fn users(g: GraphSpec) -> (Bag, Bag) {
    let mut rng = g.rng(4);
    let pool = g.n as usize;
    let users = (0..g.n)
        .map(|u| {
            let count = rng.random_range(0..=15).min(pool);
            let movies: Bag = index::sample(&mut rng, pool, count)
                .into_iter()
                .map(|m| Value::Int(m as i64))
                .collect();
            Value::constructed("User", vec![Value::Int(u as i64), Value::Bag(movies)])
        })
        .collect();
    let start = index::sample(&mut rng, pool, pool.min(3))
        .into_iter()
        .map(|m| Value::Int(m as i64))
        .collect();
    (users, start)
}
