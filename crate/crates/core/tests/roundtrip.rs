use std::sync::Arc;

use mumonoids_core::builtin::ALL;
use mumonoids_core::syntax::print_expr;
use mumonoids_core::value::F64;
use mumonoids_core::{parse_expr, AggKind, Aggregator, Builtin, Case, Compat, Expr, Literal, Pattern};
use proptest::prelude::*;

const VARS: [&str; 7] = ["x", "y", "z", "acc", "X", "R", "S1"];
const FLOATS: [f64; 5] = [0.5, 1.5, 2.25, -3.5, 1e-3];
const STRINGS: [&str; 4] = ["", "a", "Paris", "two words"];

fn name() -> impl Strategy<Value = Arc<str>> {
    prop::sample::select(&VARS[..]).prop_map(Arc::from)
}

fn pattern() -> impl Strategy<Value = Pattern> {
    let leaf = prop_oneof![
        4 => name().prop_map(Pattern::Var),
        1 => prop::sample::select(&["True", "False", "Foo"][..]).prop_map(|c| Pattern::ctor(c, vec![])),
    ];
    leaf.prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Pattern::tuple),
            (
                prop::sample::select(&["Foo", "Bar"][..]),
                prop::collection::vec(inner, 1..3)
            )
                .prop_map(|(c, args)| Pattern::ctor(c, args)),
        ]
    })
    .prop_filter("pattern variables are distinct", |p| p.duplicate_var().is_none())
}

fn literal() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-20i64..20).prop_map(Expr::int),
        prop::sample::select(&FLOATS[..]).prop_map(|f| Expr::Lit(Literal::Float(F64(f)))),
        prop::sample::select(&STRINGS[..]).prop_map(Expr::str),
    ]
}

fn compat() -> impl Strategy<Value = Compat> {
    prop_oneof![
        2 => Just(Compat::none()),
        1 => Just(Compat::any()),
        1 => prop::collection::btree_set(name(), 1..3).prop_map(Compat),
    ]
}

fn aggregator(expr: BoxedStrategy<Expr>) -> impl Strategy<Value = Aggregator> {
    let kind = prop_oneof![
        Just(AggKind::Distinct),
        Just(AggKind::Identity),
        (
            prop::sample::select(
                &[
                    Builtin::Min,
                    Builtin::Max,
                    Builtin::Add,
                    Builtin::BestRated,
                    Builtin::SetUnion
                ][..]
            ),
            pattern().prop_filter("by-key patterns bind a variable", |p| !p.vars().is_empty()),
        )
            .prop_map(|(op, pattern)| AggKind::ByKey { op, pattern }),
        (
            pattern().prop_filter("filters bind a variable", |p| !p.vars().is_empty()),
            any::<prop::sample::Index>(),
            expr
        )
            .prop_map(|(pattern, i, predicate)| {
                let vars = pattern.vars();
                AggKind::Filter {
                    var: vars[i.index(vars.len())].clone(),
                    pattern,
                    predicate: Box::new(predicate),
                }
            }),
    ];
    (kind, compat()).prop_map(|(kind, compatible_with)| Aggregator { kind, compatible_with })
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        literal(),
        name().prop_map(Expr::Var),
        prop::sample::select(&ALL[..]).prop_map(Expr::Builtin),
        Just(Expr::Empty),
        prop::sample::select(&["True", "False", "Foo"][..]).prop_map(|c| Expr::Construct(c.into(), vec![])),
    ];
    leaf.prop_recursive(4, 48, 4, |inner| {
        let b = || inner.clone().prop_map(Box::new);
        prop_oneof![
            b().prop_map(Expr::Singleton),
            prop::collection::vec((pattern(), inner.clone()), 1..3).prop_map(|cases| {
                Expr::lambda(
                    cases
                        .into_iter()
                        .map(|(pattern, body)| Case { pattern, body })
                        .collect(),
                )
            }),
            (b(), b()).prop_map(|(f, a)| Expr::Apply(f, a)),
            prop::collection::vec(inner.clone(), 2..4).prop_map(|a| Expr::Construct("Tuple".into(), a)),
            (
                prop::sample::select(&["Foo", "Bar"][..]),
                prop::collection::vec(inner.clone(), 1..3)
            )
                .prop_map(|(c, a)| Expr::Construct(c.into(), a)),
            (b(), b()).prop_map(|(f, x)| Expr::Flatmap(f, x)),
            (b(), b(), b()).prop_map(|(op, zero, src)| Expr::Reduce { op, zero, src }),
            (b(), b(), compat()).prop_map(|(op, src, compat)| Expr::ReduceByKey { op, src, compat }),
            (b(), b()).prop_map(|(l, r)| Expr::Cogroup(l, r)),
            (b(), b()).prop_map(|(l, r)| Expr::Join(l, r)),
            (aggregator(inner.clone().boxed()), b(), b()).prop_map(|(delta, seed, phi)| Expr::Fixpoint {
                delta,
                seed,
                phi
            }),
            (aggregator(inner.clone().boxed()), b()).prop_map(|(a, x)| Expr::Aggregate(a, x)),
            b().prop_map(Expr::Dist),
            (name(), b(), b()).prop_map(|(x, e, body)| Expr::Let(x, e, body)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn printed_terms_parse_back(e in expr()) {
        let printed = print_expr(&e);
        let back = parse_expr(&printed);
        prop_assert!(back.is_ok(), "{printed}: {:?}", back.err());
        prop_assert_eq!(back.unwrap(), e, "{}", printed);
    }
}
