mod support;

use mumonoids_core::aggregation::Delta;
use mumonoids_core::optimizer::{optimize, Rule};
use mumonoids_core::sample::{edge_bag, weighted_edge_bag};
use mumonoids_core::{Bag, Evaluator, Value};
use proptest::prelude::*;
use support::*;

fn edges() -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((0..8i64, 0..8i64), 0..20)
}

fn weighted() -> impl Strategy<Value = Vec<((i64, i64), i64)>> {
    prop::collection::vec(((0..8i64, 0..8i64), 0..=5i64), 0..20)
}

proptest! {
    #[test]
    fn transitive_closure_matches_warshall(es in edges()) {
        let r = edge_bag(&es);
        let out = Evaluator::default()
            .fixpoint(&Delta::Distinct, r.clone(), &phi(TC_PHI, &env_r(&r)), false)
            .unwrap();
        prop_assert_eq!(pairs(&out.result), warshall(&es));
        prop_assert!(out.result.is_set());
    }

    #[test]
    fn tc_program_matches_warshall(es in edges()) {
        let p = program(TC_PROGRAM);
        let env = env_r(&edge_bag(&es));
        let out = Evaluator::default().eval_bag(&env, &p.body).unwrap();
        prop_assert_eq!(pairs(&out), warshall(&es));
    }

    #[test]
    fn optimized_shortest_paths_match_floyd_warshall(es in weighted()) {
        let p = program(SP_PROGRAM);
        let opt = optimize(&p.input_types(), &p.body).unwrap();
        prop_assert!(opt.trace.applied_rules().contains(&Rule::PA));
        let env = env_r(&weighted_edge_bag(&es));
        let out = Evaluator::default().eval_bag(&env, &opt.expr).unwrap();
        prop_assert_eq!(distances(&out), floyd_warshall(&es));
    }

    #[test]
    fn min_by_key_fixpoint_matches_floyd_warshall(es in weighted()) {
        let r = weighted_edge_bag(&es);
        let out = Evaluator::default()
            .fixpoint(&Delta::min_by_key(), r.clone(), &phi(SP_PHI, &env_r(&r)), false)
            .unwrap();
        prop_assert_eq!(distances(&out.result), floyd_warshall(&es));
    }
}

#[test]
fn words_match_enumeration() {
    for ls in [&["a"][..], &["a", "b"], &["a", "b", "c"], &["a", "b", "c", "d"]] {
        let c = letters(ls);
        let env = mumonoids_core::eval::Env::new().with_value("C", Value::Bag(c.clone()));
        let out = Evaluator::default()
            .fixpoint(&Delta::Distinct, c, &phi(WORDS_PHI, &env), true)
            .unwrap();
        let got: std::collections::BTreeSet<String> = out
            .result
            .elements()
            .map(|v| v.to_string().trim_matches('"').to_string())
            .collect();
        assert_eq!(got, words(ls));
        assert_eq!(out.iterations, ls.len() as u64);
    }
}

#[test]
fn words_rounds() {
    let c = letters(&["a", "b", "c"]);
    let env = mumonoids_core::eval::Env::new().with_value("C", Value::Bag(c.clone()));
    let out = Evaluator::default()
        .fixpoint(&Delta::Distinct, c, &phi(WORDS_PHI, &env), true)
        .unwrap();
    let r1: Bag = ["ab", "ac", "ba", "bc", "ca", "cb"]
        .iter()
        .map(|w| Value::str(w))
        .collect();
    assert_eq!(out.rounds[1], r1);
    assert_eq!(out.rounds[2].len(), 6);
    assert_eq!(out.result.len(), 15);
}

#[test]
fn oracles_agree_on_a_triangle() {
    let es = [(0, 1), (1, 2), (2, 0)];
    assert_eq!(warshall(&es).len(), 9);
    let fw = floyd_warshall(&[((0, 1), 1), ((1, 2), 1), ((0, 2), 5)]);
    assert_eq!(fw[&(0, 2)], 2);
    assert!(!fw.contains_key(&(0, 0)));
}
