//! Runtime data: constants, constructed values and bags.

use alloc::collections::btree_map::{self, BTreeMap};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Constructor, variable and builtin names.
pub type Name = Arc<str>;

pub const TUPLE: &str = "Tuple";
pub const TRUE: &str = "True";
pub const FALSE: &str = "False";

/// An `f64` with a total order, so floats can live inside bags.
#[derive(Clone, Copy, Debug)]
pub struct F64(pub f64);

impl PartialEq for F64 {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}

impl Eq for F64 {}

impl PartialOrd for F64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for F64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl core::hash::Hash for F64 {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

/// A runtime datum.
///
/// The derived ordering is the canonical order used for printing and for
/// every fold over a bag: constants sort before constructed values, which
/// sort before bags. Constructed values compare by name, then arguments.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Float(F64),
    Str(Arc<str>),
    Constructed(Name, Arc<[Value]>),
    Bag(Bag),
}

impl Value {
    pub fn int(i: i64) -> Self {
        Value::Int(i)
    }

    pub fn float(f: f64) -> Self {
        Value::Float(F64(f))
    }

    pub fn str(s: &str) -> Self {
        Value::Str(Arc::from(s))
    }

    pub fn constructed(name: &str, args: Vec<Value>) -> Self {
        Value::Constructed(Arc::from(name), Arc::from(args))
    }

    pub fn tuple(args: Vec<Value>) -> Self {
        Value::constructed(TUPLE, args)
    }

    pub fn pair(a: Value, b: Value) -> Self {
        Value::tuple(alloc::vec![a, b])
    }

    pub fn bool(b: bool) -> Self {
        Value::constructed(if b { TRUE } else { FALSE }, Vec::new())
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Constructed(name, args) if args.is_empty() => match &**name {
                TRUE => Some(true),
                FALSE => Some(false),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn as_bag(&self) -> Option<&Bag> {
        match self {
            Value::Bag(b) => Some(b),
            _ => None,
        }
    }

    pub fn into_bag(self) -> Option<Bag> {
        match self {
            Value::Bag(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Splits a 2-tuple into its components.
    pub fn as_pair(&self) -> Option<(&Value, &Value)> {
        match self {
            Value::Constructed(name, args) if &**name == TUPLE && args.len() == 2 => Some((&args[0], &args[1])),
            _ => None,
        }
    }

    /// Follows a constructor path; `None` when the value does not have the
    /// addressed shape.
    pub fn at_path(&self, path: &[crate::pattern::PathStep]) -> Option<&Value> {
        let mut cur = self;
        for step in path {
            match cur {
                Value::Constructed(name, args) if *name == step.ctor => {
                    cur = args.get(step.index)?;
                }
                _ => return None,
            }
        }
        Some(cur)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<Bag> for Value {
    fn from(b: Bag) -> Self {
        Value::Bag(b)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write_float(f, x.0),
            Value::Str(s) => write_quoted(f, s),
            Value::Constructed(name, args) => {
                f.write_str(name)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
            Value::Bag(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub(crate) fn write_float(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x == f64::INFINITY {
        f.write_str("inf")
    } else if x == f64::NEG_INFINITY {
        f.write_str("-inf")
    } else {
        write!(f, "{x:?}")
    }
}

pub(crate) fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

/// A finite multiset. Each distinct element maps to its (positive)
/// multiplicity; iteration follows the canonical value order.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bag {
    counts: BTreeMap<Value, u64>,
    len: u64,
}

impl Bag {
    pub fn new() -> Self {
        Bag::default()
    }

    pub fn singleton(v: Value) -> Self {
        let mut b = Bag::new();
        b.insert(v);
        b
    }

    pub fn insert(&mut self, v: Value) {
        self.insert_n(v, 1);
    }

    pub fn insert_n(&mut self, v: Value, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(v).or_insert(0) += n;
        self.len += n;
    }

    /// Total number of elements, counting multiplicity.
    pub fn len(&self) -> u64 {
        self.len
    }

    /// Number of distinct elements.
    pub fn distinct_len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn multiplicity(&self, v: &Value) -> u64 {
        self.counts.get(v).copied().unwrap_or(0)
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.counts.contains_key(v)
    }

    /// Distinct elements with their multiplicities, in canonical order.
    pub fn iter(&self) -> btree_map::Iter<'_, Value, u64> {
        self.counts.iter()
    }

    /// Distinct elements in canonical order.
    pub fn elements(&self) -> btree_map::Keys<'_, Value, u64> {
        self.counts.keys()
    }

    /// Every element instance, repeated according to multiplicity.
    pub fn instances(&self) -> impl Iterator<Item = &Value> + '_ {
        self.counts
            .iter()
            .flat_map(|(v, n)| core::iter::repeat_n(v, *n as usize))
    }

    /// Bag union: multiplicities add.
    pub fn union(&self, other: &Bag) -> Bag {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn extend_from(&mut self, other: &Bag) {
        for (v, n) in other.iter() {
            self.insert_n(v.clone(), *n);
        }
    }

    pub fn absorb(&mut self, other: Bag) {
        if self.is_empty() {
            *self = other;
            return;
        }
        for (v, n) in other.counts {
            self.insert_n(v, n);
        }
    }

    /// Every element exactly once.
    pub fn distinct(&self) -> Bag {
        Bag {
            counts: self.counts.keys().map(|v| (v.clone(), 1)).collect(),
            len: self.counts.len() as u64,
        }
    }

    pub fn is_set(&self) -> bool {
        self.len == self.counts.len() as u64
    }

    /// Distinct elements of `self` that do not occur in `other`.
    pub fn set_difference(&self, other: &Bag) -> Bag {
        self.counts.keys().filter(|v| !other.contains(v)).cloned().collect()
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&Value) -> bool) {
        let mut removed = 0;
        self.counts.retain(|v, n| {
            let k = keep(v);
            if !k {
                removed += *n;
            }
            k
        });
        self.len -= removed;
    }

    /// True when the two bags share no element.
    pub fn is_disjoint(&self, other: &Bag) -> bool {
        let (small, large) = if self.distinct_len() <= other.distinct_len() {
            (self, other)
        } else {
            (other, self)
        };
        small.elements().all(|v| !large.contains(v))
    }
}

impl FromIterator<Value> for Bag {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        let mut b = Bag::new();
        for v in iter {
            b.insert(v);
        }
        b
    }
}

impl Extend<Value> for Bag {
    fn extend<I: IntoIterator<Item = Value>>(&mut self, iter: I) {
        for v in iter {
            self.insert(v);
        }
    }
}

impl fmt::Display for Bag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.instances().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Bag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn ints(xs: &[i64]) -> Bag {
        xs.iter().map(|&i| Value::Int(i)).collect()
    }

    #[test]
    fn union_with_empty_is_neutral() {
        assert_eq!(Bag::new().union(&ints(&[1, 1])), ints(&[1, 1]));
    }

    #[test]
    fn union_adds_multiplicities() {
        let u = ints(&[1, 2]).union(&ints(&[2, 3]));
        assert_eq!(u, ints(&[1, 2, 2, 3]));
        assert_eq!(u.multiplicity(&Value::Int(2)), 2);
        assert_eq!(u.len(), 4);
    }

    #[test]
    fn union_commutes_on_constructed_values() {
        let a = Bag::singleton(Value::str("a"));
        let b = Bag::singleton(Value::str("b"));
        assert_eq!(a.union(&b), b.union(&a));
    }

    #[test]
    fn distinct_examples() {
        assert_eq!(Bag::new().distinct(), Bag::new());
        assert_eq!(ints(&[1, 1, 2]).distinct(), ints(&[1, 2]));
    }

    #[test]
    fn canonical_encoding() {
        let t = Value::pair(Value::Int(1), Value::Int(2));
        assert_eq!(t.to_string(), "Tuple(1,2)");
        assert_eq!(ints(&[2, 1, 1]).to_string(), "{1, 1, 2}");
        assert_eq!(Value::bool(true).to_string(), "True");
        assert_eq!(Value::float(f64::INFINITY).to_string(), "inf");
        assert_eq!(Value::str("a\"b").to_string(), "\"a\\\"b\"");
    }

    #[test]
    fn canonical_order_constants_constructed_bags() {
        let mut vs = [
            Value::Bag(ints(&[1])),
            Value::bool(false),
            Value::Int(3),
            Value::str("x"),
        ];
        vs.sort();
        assert!(matches!(vs[0], Value::Int(_)));
        assert!(matches!(vs[1], Value::Str(_)));
        assert!(matches!(vs[2], Value::Constructed(..)));
        assert!(matches!(vs[3], Value::Bag(_)));
    }

    fn small_bag() -> impl Strategy<Value = Bag> {
        proptest::collection::vec(0i64..6, 0..12).prop_map(|xs| ints(&xs))
    }

    proptest! {
        #[test]
        fn bag_monoid_laws(a in small_bag(), b in small_bag(), c in small_bag()) {
            prop_assert_eq!(a.union(&b.union(&c)), a.union(&b).union(&c));
            prop_assert_eq!(a.union(&b), b.union(&a));
            prop_assert_eq!(a.union(&Bag::new()), a.clone());
        }

        #[test]
        fn equality_is_multiset_equality(xs in proptest::collection::vec(0i64..5, 0..10), seed in any::<u64>()) {
            let mut shuffled = xs.clone();
            // deterministic permutation
            let n = shuffled.len();
            if n > 1 {
                for i in 0..n {
                    let j = ((seed.wrapping_mul(i as u64 + 7)) % n as u64) as usize;
                    shuffled.swap(i, j);
                }
            }
            prop_assert_eq!(ints(&xs), ints(&shuffled));
            let mut sorted = xs.clone();
            sorted.sort();
            prop_assert_eq!(ints(&xs).to_string(), ints(&sorted).to_string());
        }

        #[test]
        fn distinct_is_an_aggregation(a in small_bag(), b in small_bag()) {
            prop_assert_eq!(a.union(&b).distinct(), a.distinct().union(&b.distinct()).distinct());
            prop_assert_eq!(a.distinct().distinct(), a.distinct());
        }
    }
}
