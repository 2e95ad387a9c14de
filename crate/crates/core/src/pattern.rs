//! Patterns, paths into constructed values, and value matching.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::value::{Name, Value, TUPLE};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pattern {
    Var(Name),
    Ctor(Name, Vec<Pattern>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("pattern variable `{0}` occurs more than once")]
pub struct DuplicateVar(pub Name);

/// One step of a path: descend into argument `index` of constructor `ctor`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathStep {
    pub ctor: Name,
    pub index: usize,
}

pub type Path = Vec<PathStep>;

pub fn format_path(path: &[PathStep]) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    if path.is_empty() {
        s.push_str("<root>");
    }
    for (i, step) in path.iter().enumerate() {
        if i > 0 {
            s.push('.');
        }
        let _ = write!(s, "{}#{}", step.ctor, step.index);
    }
    s
}

impl Pattern {
    pub fn var(name: &str) -> Self {
        Pattern::Var(Arc::from(name))
    }

    pub fn ctor(name: &str, args: Vec<Pattern>) -> Self {
        Pattern::Ctor(Arc::from(name), args)
    }

    pub fn tuple(args: Vec<Pattern>) -> Self {
        Pattern::ctor(TUPLE, args)
    }

    /// Builds a constructor pattern, rejecting repeated variables.
    pub fn checked_ctor(name: &str, args: Vec<Pattern>) -> Result<Self, DuplicateVar> {
        let p = Pattern::ctor(name, args);
        match p.duplicate_var() {
            Some(v) => Err(DuplicateVar(v)),
            None => Ok(p),
        }
    }

    /// Variables in left-to-right order.
    pub fn vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Name>) {
        match self {
            Pattern::Var(v) => out.push(v.clone()),
            Pattern::Ctor(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn binds(&self, name: &str) -> bool {
        match self {
            Pattern::Var(v) => &**v == name,
            Pattern::Ctor(_, args) => args.iter().any(|a| a.binds(name)),
        }
    }

    pub fn duplicate_var(&self) -> Option<Name> {
        let vars = self.vars();
        let mut seen = alloc::collections::BTreeSet::new();
        vars.into_iter().find(|v| !seen.insert(v.clone()))
    }

    /// The path from the root of the matched value to the position bound by `var`.
    pub fn path_to(&self, var: &str) -> Option<Path> {
        match self {
            Pattern::Var(v) if &**v == var => Some(Vec::new()),
            Pattern::Var(_) => None,
            Pattern::Ctor(name, args) => args.iter().enumerate().find_map(|(i, a)| {
                a.path_to(var).map(|mut rest| {
                    rest.insert(
                        0,
                        PathStep {
                            ctor: name.clone(),
                            index: i,
                        },
                    );
                    rest
                })
            }),
        }
    }

    /// The variable at `path`, if the pattern reaches that deep with a variable.
    pub fn var_at(&self, path: &[PathStep]) -> Option<&Name> {
        match (self, path.split_first()) {
            (Pattern::Var(v), None) => Some(v),
            (Pattern::Ctor(name, args), Some((step, rest))) if *name == step.ctor => args.get(step.index)?.var_at(rest),
            _ => None,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var(v) => f.write_str(v),
            Pattern::Ctor(name, args) => {
                let tuple = &**name == TUPLE && args.len() >= 2;
                if !tuple {
                    f.write_str(name)?;
                    if args.is_empty() {
                        return Ok(());
                    }
                }
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The outcome of a successful structural comparison: either bindings for
/// every pattern variable, or ⊥.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bindings {
    Bottom,
    Map(BTreeMap<Name, Value>),
}

impl Bindings {
    pub fn empty() -> Self {
        Bindings::Map(BTreeMap::new())
    }

    /// Union with ⊥ absorbing.
    pub fn union(self, other: Bindings) -> Bindings {
        match (self, other) {
            (Bindings::Map(mut a), Bindings::Map(b)) => {
                a.extend(b);
                Bindings::Map(a)
            }
            _ => Bindings::Bottom,
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Bindings::Bottom)
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        match self {
            Bindings::Bottom => None,
            Bindings::Map(m) => m.get(name),
        }
    }
}

/// A constructor value whose arity differs from a same-named pattern. Well
/// typed terms never produce this.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("constructor `{ctor}` has {value_arity} arguments but the pattern expects {pattern_arity}")]
pub struct ArityMismatch {
    pub ctor: Name,
    pub value_arity: usize,
    pub pattern_arity: usize,
}

pub fn pattern_match(v: &Value, p: &Pattern) -> Result<Bindings, ArityMismatch> {
    let mut out = Vec::new();
    Ok(if match_into(v, p, &mut out)? {
        Bindings::Map(out.into_iter().collect())
    } else {
        Bindings::Bottom
    })
}

/// Matching without building a map; pushes bindings in pattern order and
/// returns `false` for ⊥. On ⊥ the contents of `out` are unspecified.
pub fn match_into(v: &Value, p: &Pattern, out: &mut Vec<(Name, Value)>) -> Result<bool, ArityMismatch> {
    match p {
        Pattern::Var(x) => {
            out.push((x.clone(), v.clone()));
            Ok(true)
        }
        Pattern::Ctor(name, pats) => match v {
            Value::Constructed(vname, args) if vname == name => {
                if args.len() != pats.len() {
                    return Err(ArityMismatch {
                        ctor: name.clone(),
                        value_arity: args.len(),
                        pattern_arity: pats.len(),
                    });
                }
                for (a, sp) in args.iter().zip(pats) {
                    if !match_into(a, sp, out)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            _ => Ok(false),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn t(a: Value, b: Value) -> Value {
        Value::pair(a, b)
    }

    #[test]
    fn tuple_binds_components() {
        let b = pattern_match(
            &t(Value::Int(1), Value::Int(2)),
            &Pattern::tuple(vec![Pattern::var("x"), Pattern::var("y")]),
        )
        .unwrap();
        assert_eq!(b.get("x"), Some(&Value::Int(1)));
        assert_eq!(b.get("y"), Some(&Value::Int(2)));
    }

    #[test]
    fn different_constructor_is_bottom() {
        let v = Value::constructed("Circle", vec![Value::Int(3)]);
        let p = Pattern::ctor("Square", vec![Pattern::var("r")]);
        assert!(pattern_match(&v, &p).unwrap().is_bottom());
    }

    #[test]
    fn nested_projection() {
        let v = t(Value::Int(1), t(Value::Int(5), Value::Int(6)));
        let p = Pattern::tuple(vec![
            Pattern::var("x"),
            Pattern::tuple(vec![Pattern::var("a"), Pattern::var("y")]),
        ]);
        assert_eq!(pattern_match(&v, &p).unwrap().get("a"), Some(&Value::Int(5)));
        let path = p.path_to("a").unwrap();
        assert_eq!(v.at_path(&path), Some(&Value::Int(5)));
        assert_eq!(p.var_at(&path).map(|n| &**n), Some("a"));
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let v = t(Value::Int(1), Value::Int(2));
        let p = Pattern::tuple(vec![Pattern::var("x")]);
        assert!(pattern_match(&v, &p).is_err());
    }

    #[test]
    fn duplicate_variable_rejected() {
        assert_eq!(
            Pattern::checked_ctor(TUPLE, vec![Pattern::var("x"), Pattern::var("x")]),
            Err(DuplicateVar(Arc::from("x")))
        );
    }

    #[test]
    fn bottom_absorbs_union() {
        assert!(Bindings::Bottom.union(Bindings::empty()).is_bottom());
        assert!(Bindings::empty().union(Bindings::Bottom).is_bottom());
    }

    fn arb_value() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![(0i64..4).prop_map(Value::Int), Just(Value::bool(true)),];
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Value::pair(a, b)),
                inner.prop_map(|a| Value::constructed("Box", vec![a])),
            ]
        })
    }

    fn arb_pattern() -> impl Strategy<Value = Pattern> {
        let leaf = prop_oneof![Just(Pattern::var("_"))];
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Pattern::tuple(vec![a, b])),
                inner.prop_map(|a| Pattern::ctor("Box", vec![a])),
            ]
        })
        .prop_map(|p| rename(p, &mut 0))
    }

    fn rename(p: Pattern, next: &mut usize) -> Pattern {
        match p {
            Pattern::Var(_) => {
                *next += 1;
                Pattern::var(&alloc::format!("v{next}"))
            }
            Pattern::Ctor(n, args) => Pattern::Ctor(n, args.into_iter().map(|a| rename(a, next)).collect()),
        }
    }

    proptest! {
        #[test]
        fn match_is_all_or_nothing(v in arb_value(), p in arb_pattern()) {
            match pattern_match(&v, &p).unwrap() {
                Bindings::Bottom => {}
                Bindings::Map(m) => {
                    let vars = p.vars();
                    prop_assert_eq!(m.len(), vars.len());
                    for x in vars {
                        let path = p.path_to(&x).unwrap();
                        prop_assert_eq!(v.at_path(&path), m.get(&x));
                    }
                }
            }
        }
    }
}
