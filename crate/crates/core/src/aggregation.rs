//! Aggregation functions δ, their combine `a ⊕_δ b = δ(a ⊎ b)` and the
//! compatibility probe `δ∘φ∘δ = δ∘φ`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::builtin::Builtin;
use crate::eval::{Env, EvalError, Evaluator};
use crate::expr::{AggKind, Aggregator, Expr};
use crate::pattern::{match_into, Path, PathStep, Pattern};
use crate::value::{Bag, Name, Value};

/// A runtime aggregation function.
#[derive(Clone)]
pub enum Delta {
    Identity,
    Distinct,
    /// Folds the component at `value_path` with `op` across elements equal
    /// everywhere else.
    ByKey {
        op: Builtin,
        pattern: Pattern,
        value_path: Path,
    },
    /// Keeps elements whose `var` component satisfies `predicate`.
    Filter {
        pattern: Pattern,
        var: Name,
        path: Path,
        predicate: Arc<Expr>,
        env: Env,
    },
}

impl core::fmt::Debug for Delta {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Refuted { witness: Bag },
    NotRefuted { samples: usize },
}

impl Verdict {
    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted { .. })
    }
}

impl Delta {
    /// Instantiates an aggregator; filter predicates close over `env`.
    pub fn from_aggregator(agg: &Aggregator, env: &Env) -> Delta {
        match &agg.kind {
            AggKind::Identity => Delta::Identity,
            AggKind::Distinct => Delta::Distinct,
            AggKind::ByKey { op, pattern } => {
                let value_path = pattern
                    .vars()
                    .last()
                    .and_then(|v| pattern.path_to(v))
                    .unwrap_or_default();
                Delta::ByKey {
                    op: *op,
                    pattern: pattern.clone(),
                    value_path,
                }
            }
            AggKind::Filter {
                pattern,
                var,
                predicate,
            } => Delta::Filter {
                pattern: pattern.clone(),
                var: var.clone(),
                path: pattern.path_to(var).unwrap_or_default(),
                predicate: Arc::new((**predicate).clone()),
                env: env.clone(),
            },
        }
    }

    pub fn min_by_key() -> Delta {
        Delta::from_aggregator(
            &Aggregator::by_key(Builtin::Min, Aggregator::pair_pattern()),
            &Env::new(),
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            Delta::Identity => "identity",
            Delta::Distinct => "distinct",
            Delta::ByKey { op: Builtin::Min, .. } => "minByKey",
            Delta::ByKey { op: Builtin::Max, .. } => "maxByKey",
            Delta::ByKey { op: Builtin::Add, .. } => "sumByKey",
            Delta::ByKey { .. } => "byKey",
            Delta::Filter { .. } => "filter",
        }
    }

    /// Whether `δ(a ⊎ a) = δ(a)`, i.e. re-adding known elements never
    /// changes the aggregate. Semi-naive iteration relies on it.
    pub fn absorbs_duplicates(&self) -> bool {
        match self {
            Delta::Distinct => true,
            Delta::ByKey { op, .. } => {
                matches!(op, Builtin::Min | Builtin::Max | Builtin::BestRated | Builtin::SetUnion)
            }
            Delta::Identity | Delta::Filter { .. } => false,
        }
    }

    pub fn apply(&self, ev: &Evaluator<'_>, a: Bag) -> Result<Bag, EvalError> {
        match self {
            Delta::Identity => Ok(a),
            Delta::Distinct => Ok(if a.is_set() { a } else { a.distinct() }),
            Delta::ByKey {
                op,
                pattern,
                value_path,
            } => {
                let mut groups: BTreeMap<Value, (Value, Value)> = BTreeMap::new();
                let mut scratch = Vec::new();
                for v in a.instances() {
                    scratch.clear();
                    if !match_into(v, pattern, &mut scratch)? {
                        return Err(shape(v, pattern));
                    }
                    let x = v.at_path(value_path).ok_or_else(|| shape(v, pattern))?;
                    let key = replace_at(v, value_path, Value::Int(0));
                    match groups.remove(&key) {
                        None => {
                            groups.insert(key, (v.clone(), x.clone()));
                        }
                        Some((template, acc)) => {
                            let acc = op.apply(&[acc, x.clone()])?;
                            groups.insert(key, (template, acc));
                        }
                    }
                }
                Ok(groups
                    .into_values()
                    .map(|(template, acc)| replace_at(&template, value_path, acc))
                    .collect())
            }
            Delta::Filter {
                pattern,
                var,
                path,
                predicate,
                env,
            } => {
                let mut out = Bag::new();
                let mut scratch = Vec::new();
                for (v, n) in a.iter() {
                    scratch.clear();
                    if !match_into(v, pattern, &mut scratch)? {
                        return Err(shape(v, pattern));
                    }
                    let x = v.at_path(path).ok_or_else(|| shape(v, pattern))?;
                    let keep = ev
                        .eval_value(&env.with(var.clone(), crate::eval::Val::Data(x.clone())), predicate)?
                        .as_bool()
                        .ok_or_else(|| EvalError::Malformed(format!("filter predicate on {x} is not a boolean")))?;
                    if keep {
                        out.insert_n(v.clone(), *n);
                    }
                }
                Ok(out)
            }
        }
    }

    /// `a ⊕_δ b = δ(a ⊎ b)`.
    pub fn combine(&self, ev: &Evaluator<'_>, a: &Bag, b: &Bag) -> Result<Bag, EvalError> {
        match self {
            Delta::Identity => Ok(a.union(b)),
            Delta::Distinct => {
                let mut out = a.distinct();
                for v in b.elements() {
                    if !out.contains(v) {
                        out.insert(v.clone());
                    }
                }
                Ok(out)
            }
            _ => self.apply(ev, a.union(b)),
        }
    }

    /// Looks for a bag `a` with `δ(φ(δ(a))) ≠ δ(φ(a))`. Not finding one is
    /// evidence of compatibility, not a proof.
    pub fn probe_compatibility(
        &self,
        ev: &Evaluator<'_>,
        phi: &mut dyn FnMut(&Bag) -> Result<Bag, EvalError>,
        samples: &mut dyn Iterator<Item = Bag>,
    ) -> Result<Verdict, EvalError> {
        let mut n = 0;
        for a in samples {
            let lhs = self.apply(ev, phi(&self.apply(ev, a.clone())?)?)?;
            let rhs = self.apply(ev, phi(&a)?)?;
            if lhs != rhs {
                return Ok(Verdict::Refuted { witness: a });
            }
            n += 1;
        }
        Ok(Verdict::NotRefuted { samples: n })
    }
}

fn shape(v: &Value, p: &Pattern) -> EvalError {
    EvalError::Malformed(format!("aggregation expects elements shaped `{p}`, found {v}"))
}

/// `v` with the component at `path` replaced by `by`.
pub fn replace_at(v: &Value, path: &[PathStep], by: Value) -> Value {
    let Some((step, rest)) = path.split_first() else {
        return by;
    };
    match v {
        Value::Constructed(c, args) if *c == step.ctor && step.index < args.len() => {
            let mut args: Vec<Value> = args.to_vec();
            args[step.index] = replace_at(&args[step.index], rest, by);
            Value::Constructed(c.clone(), Arc::from(args))
        }
        _ => v.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::name;
    use alloc::vec;
    use proptest::prelude::*;

    fn p2(a: Value, b: Value) -> Value {
        Value::pair(a, b)
    }

    fn sp_pattern() -> Pattern {
        Pattern::tuple(vec![
            Pattern::tuple(vec![Pattern::var("s"), Pattern::var("d")]),
            Pattern::var("w"),
        ])
    }

    fn sp_elem(s: i64, d: i64, w: i64) -> Value {
        p2(p2(Value::Int(s), Value::Int(d)), Value::Int(w))
    }

    fn min_sp() -> Delta {
        Delta::from_aggregator(&Aggregator::by_key(Builtin::Min, sp_pattern()), &Env::new())
    }

    fn src_filter(target: i64) -> Delta {
        Delta::from_aggregator(
            &Aggregator {
                kind: AggKind::Filter {
                    pattern: Pattern::tuple(vec![Pattern::var("s"), Pattern::var("d")]),
                    var: name("s"),
                    predicate: alloc::boxed::Box::new(Expr::binop(Builtin::Eq, Expr::var("s"), Expr::int(target))),
                },
                compatible_with: Default::default(),
            },
            &Env::new(),
        )
    }

    #[test]
    fn apply_examples() {
        let ev = Evaluator::default();
        let b: Bag = [1, 1, 2].iter().map(|&i| Value::Int(i)).collect();
        assert_eq!(Delta::Distinct.apply(&ev, b).unwrap().len(), 2);
        let sp: Bag = [sp_elem(1, 2, 3), sp_elem(1, 2, 1)].into_iter().collect();
        assert_eq!(min_sp().apply(&ev, sp).unwrap(), Bag::singleton(sp_elem(1, 2, 1)));
        let edges: Bag = [p2(Value::Int(1), Value::Int(2)), p2(Value::Int(2), Value::Int(3))]
            .into_iter()
            .collect();
        assert_eq!(
            src_filter(1).apply(&ev, edges).unwrap(),
            Bag::singleton(p2(Value::Int(1), Value::Int(2)))
        );
    }

    #[test]
    fn combine_examples() {
        let ev = Evaluator::default();
        let one = Bag::singleton(Value::Int(1));
        let onetwo: Bag = [1, 2].iter().map(|&i| Value::Int(i)).collect();
        assert_eq!(Delta::Distinct.combine(&ev, &one, &onetwo).unwrap(), onetwo);
        let k = |w| Bag::singleton(p2(Value::str("k"), Value::Int(w)));
        assert_eq!(Delta::min_by_key().combine(&ev, &k(3), &k(1)).unwrap(), k(1));
        assert_eq!(min_sp().combine(&ev, &Bag::new(), &Bag::new()).unwrap(), Bag::new());
    }

    fn arb_sp_bag() -> impl Strategy<Value = Bag> {
        proptest::collection::vec((0i64..3, 0i64..3, 0i64..6), 0..10)
            .prop_map(|xs| xs.into_iter().map(|(s, d, w)| sp_elem(s, d, w)).collect())
    }

    fn all_deltas() -> Vec<Delta> {
        let sum = Delta::from_aggregator(&Aggregator::by_key(Builtin::Add, sp_pattern()), &Env::new());
        let max = Delta::from_aggregator(&Aggregator::by_key(Builtin::Max, sp_pattern()), &Env::new());
        let filt = Delta::from_aggregator(
            &Aggregator {
                kind: AggKind::Filter {
                    pattern: sp_pattern(),
                    var: name("w"),
                    predicate: alloc::boxed::Box::new(Expr::binop(Builtin::Lt, Expr::var("w"), Expr::int(3))),
                },
                compatible_with: Default::default(),
            },
            &Env::new(),
        );
        vec![Delta::Identity, Delta::Distinct, min_sp(), max, sum, filt]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn aggregation_laws(a in arb_sp_bag(), b in arb_sp_bag()) {
            let ev = Evaluator::default();
            for d in all_deltas() {
                prop_assert_eq!(d.apply(&ev, Bag::new()).unwrap(), Bag::new());
                let whole = d.apply(&ev, a.union(&b)).unwrap();
                let parts = d.apply(&ev, d.apply(&ev, a.clone()).unwrap().union(&d.apply(&ev, b.clone()).unwrap())).unwrap();
                prop_assert_eq!(&whole, &parts, "{}", d.label());
                let once = d.apply(&ev, a.clone()).unwrap();
                prop_assert_eq!(d.apply(&ev, once.clone()).unwrap(), once);
                // δ is a homomorphism onto (δ-images, ⊕_δ)
                let da = d.apply(&ev, a.clone()).unwrap();
                let db = d.apply(&ev, b.clone()).unwrap();
                prop_assert_eq!(whole, d.combine(&ev, &da, &db).unwrap());
            }
        }

        #[test]
        fn equivalence_is_a_congruence(a in arb_sp_bag(), b in arb_sp_bag(), extra in 0i64..6) {
            // a' adds duplicates and a dominated element; for min-by-key it is
            // equivalent to a, so a ⊎ b and a' ⊎ b must aggregate equally.
            let ev = Evaluator::default();
            let d = min_sp();
            let mut a2 = a.union(&a);
            if let Some(first) = a.elements().next() {
                let (key, w) = first.as_pair().unwrap();
                let bigger = w.as_int().unwrap() + 1 + extra;
                a2.insert(Value::pair(key.clone(), Value::Int(bigger)));
            }
            prop_assert_eq!(d.apply(&ev, a.clone()).unwrap(), d.apply(&ev, a2.clone()).unwrap());
            prop_assert_eq!(
                d.apply(&ev, a.union(&b)).unwrap(),
                d.apply(&ev, a2.union(&b)).unwrap()
            );
            let dd = Delta::Distinct;
            prop_assert_eq!(
                dd.apply(&ev, a.union(&b)).unwrap(),
                dd.apply(&ev, a.union(&a).union(&b)).unwrap()
            );
        }
    }
}
