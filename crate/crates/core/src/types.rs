//! Type expressions, sum combination, subtyping and pattern/type matching.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::name;
use crate::pattern::{Path, PathStep, Pattern};
use crate::value::{Name, Value, FALSE, TRUE, TUPLE};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SumCase {
    pub ctor: Name,
    pub params: Vec<TypeExpr>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeExpr {
    /// `Int`, `Float` or `String`.
    Basic(Name),
    /// Cases sorted by constructor name. The empty sum is the type of no
    /// value; it is the type of the elements of `{}`.
    Sum(Vec<SumCase>),
    LocalBag(Box<TypeExpr>),
    DistBag(Box<TypeExpr>),
    Func(Box<TypeExpr>, Box<TypeExpr>),
    /// An opaque type only equal to itself, used by the parametricity probe.
    Rigid(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeMismatch {
    #[error("cannot combine {0} with {1}")]
    Combine(TypeExpr, TypeExpr),
    #[error("pattern `{0}` is incompatible with type {1}")]
    Pattern(Pattern, TypeExpr),
    #[error("variable `{0}` is bound twice")]
    Duplicate(Name),
    #[error("path {path} does not address a node of {ty}")]
    Path { path: String, ty: TypeExpr },
}

impl TypeExpr {
    pub fn int() -> Self {
        TypeExpr::Basic(name("Int"))
    }

    pub fn float() -> Self {
        TypeExpr::Basic(name("Float"))
    }

    pub fn string() -> Self {
        TypeExpr::Basic(name("String"))
    }

    pub fn bool() -> Self {
        TypeExpr::Sum(alloc::vec![
            SumCase {
                ctor: name(FALSE),
                params: Vec::new(),
            },
            SumCase {
                ctor: name(TRUE),
                params: Vec::new(),
            },
        ])
    }

    pub fn void() -> Self {
        TypeExpr::Sum(Vec::new())
    }

    pub fn ctor(c: &str, params: Vec<TypeExpr>) -> Self {
        TypeExpr::Sum(alloc::vec![SumCase { ctor: name(c), params }])
    }

    pub fn tuple(params: Vec<TypeExpr>) -> Self {
        TypeExpr::ctor(TUPLE, params)
    }

    pub fn pair(a: TypeExpr, b: TypeExpr) -> Self {
        TypeExpr::tuple(alloc::vec![a, b])
    }

    pub fn local(t: TypeExpr) -> Self {
        TypeExpr::LocalBag(Box::new(t))
    }

    pub fn dist(t: TypeExpr) -> Self {
        TypeExpr::DistBag(Box::new(t))
    }

    pub fn func(a: TypeExpr, b: TypeExpr) -> Self {
        TypeExpr::Func(Box::new(a), Box::new(b))
    }

    pub fn is_void(&self) -> bool {
        matches!(self, TypeExpr::Sum(c) if c.is_empty())
    }

    pub fn is_bool(&self) -> bool {
        *self == TypeExpr::bool()
    }

    pub fn bag_elem(&self) -> Option<&TypeExpr> {
        match self {
            TypeExpr::LocalBag(t) | TypeExpr::DistBag(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_dist(&self) -> bool {
        matches!(self, TypeExpr::DistBag(_))
    }

    /// The same bag kind as `self` holding `elem`.
    pub fn same_bag(&self, elem: TypeExpr) -> Option<TypeExpr> {
        match self {
            TypeExpr::LocalBag(_) => Some(TypeExpr::local(elem)),
            TypeExpr::DistBag(_) => Some(TypeExpr::dist(elem)),
            _ => None,
        }
    }

    /// Components of a pair type `(a, b)`.
    pub fn as_pair(&self) -> Option<(&TypeExpr, &TypeExpr)> {
        match self {
            TypeExpr::Sum(cases) if cases.len() == 1 => {
                let c = &cases[0];
                (&*c.ctor == TUPLE && c.params.len() == 2).then(|| (&c.params[0], &c.params[1]))
            }
            _ => None,
        }
    }

    pub fn case(&self, ctor: &str) -> Option<&SumCase> {
        match self {
            TypeExpr::Sum(cases) => cases.iter().find(|c| &*c.ctor == ctor),
            _ => None,
        }
    }

    pub fn contains_rigid(&self) -> bool {
        match self {
            TypeExpr::Rigid(_) => true,
            TypeExpr::Basic(_) => false,
            TypeExpr::Sum(cases) => cases.iter().any(|c| c.params.iter().any(Self::contains_rigid)),
            TypeExpr::LocalBag(t) | TypeExpr::DistBag(t) => t.contains_rigid(),
            TypeExpr::Func(a, b) => a.contains_rigid() || b.contains_rigid(),
        }
    }

    fn contains_dist_or_func(&self) -> bool {
        match self {
            TypeExpr::DistBag(_) | TypeExpr::Func(..) => true,
            TypeExpr::Basic(_) | TypeExpr::Rigid(_) => false,
            TypeExpr::Sum(cases) => cases.iter().any(|c| c.params.iter().any(Self::contains_dist_or_func)),
            TypeExpr::LocalBag(t) => t.contains_dist_or_func(),
        }
    }

    /// Distributed bags may not be nested or hold functions.
    pub fn well_formed(&self) -> bool {
        match self {
            TypeExpr::DistBag(t) => !t.contains_dist_or_func() && t.well_formed(),
            TypeExpr::LocalBag(t) => t.well_formed(),
            TypeExpr::Func(a, b) => a.well_formed() && b.well_formed(),
            TypeExpr::Sum(cases) => cases.iter().all(|c| {
                c.params
                    .iter()
                    .all(|p| p.well_formed() && !matches!(p, TypeExpr::DistBag(_)))
            }),
            TypeExpr::Basic(_) | TypeExpr::Rigid(_) => true,
        }
    }

    /// The literal type of a value; bags of differently-shaped elements are
    /// combined with `⊞`. Returns `None` for heterogeneous values.
    pub fn of_value(v: &Value) -> Option<TypeExpr> {
        Some(match v {
            Value::Int(_) => TypeExpr::int(),
            Value::Float(_) => TypeExpr::float(),
            Value::Str(_) => TypeExpr::string(),
            Value::Constructed(c, args) => TypeExpr::Sum(alloc::vec![SumCase {
                ctor: c.clone(),
                params: args.iter().map(TypeExpr::of_value).collect::<Option<_>>()?,
            }]),
            Value::Bag(b) => {
                let mut t = TypeExpr::void();
                for e in b.elements() {
                    t = sum_combine(&t, &TypeExpr::of_value(e)?).ok()?;
                }
                TypeExpr::local(t)
            }
        })
    }

    /// Structural membership: whether `v` inhabits `self`. Bag values inhabit
    /// both bag kinds; rigid types admit anything.
    pub fn admits(&self, v: &Value) -> bool {
        match (self, v) {
            (TypeExpr::Rigid(_), _) => true,
            (TypeExpr::Basic(n), Value::Int(_)) => &**n == "Int",
            (TypeExpr::Basic(n), Value::Float(_)) => &**n == "Float",
            (TypeExpr::Basic(n), Value::Str(_)) => &**n == "String",
            (TypeExpr::Sum(cases), Value::Constructed(c, args)) => cases.iter().any(|case| {
                case.ctor == *c
                    && case.params.len() == args.len()
                    && case.params.iter().zip(args.iter()).all(|(t, a)| t.admits(a))
            }),
            (TypeExpr::LocalBag(t) | TypeExpr::DistBag(t), Value::Bag(b)) => b.elements().all(|e| t.admits(e)),
            _ => false,
        }
    }
}

/// `t1 ⊞ t2`. Bag types combine covariantly in their element type and the
/// empty sum is neutral.
pub fn sum_combine(t1: &TypeExpr, t2: &TypeExpr) -> Result<TypeExpr, TypeMismatch> {
    let fail = || TypeMismatch::Combine(t1.clone(), t2.clone());
    match (t1, t2) {
        _ if t1 == t2 => Ok(t1.clone()),
        (TypeExpr::Sum(a), _) if a.is_empty() => Ok(t2.clone()),
        (_, TypeExpr::Sum(b)) if b.is_empty() => Ok(t1.clone()),
        (TypeExpr::Sum(a), TypeExpr::Sum(b)) => {
            let mut out: Vec<SumCase> = a.clone();
            for cb in b {
                match out.iter_mut().find(|c| c.ctor == cb.ctor) {
                    None => out.push(cb.clone()),
                    Some(ca) => {
                        if ca.params.len() != cb.params.len() {
                            return Err(fail());
                        }
                        for (pa, pb) in ca.params.iter_mut().zip(&cb.params) {
                            *pa = sum_combine(pa, pb).map_err(|_| fail())?;
                        }
                    }
                }
            }
            out.sort_by(|x, y| x.ctor.cmp(&y.ctor));
            Ok(TypeExpr::Sum(out))
        }
        (TypeExpr::LocalBag(a), TypeExpr::LocalBag(b)) => Ok(TypeExpr::local(sum_combine(a, b).map_err(|_| fail())?)),
        (TypeExpr::DistBag(a), TypeExpr::DistBag(b)) => Ok(TypeExpr::dist(sum_combine(a, b).map_err(|_| fail())?)),
        _ => Err(fail()),
    }
}

/// `t1 <: t2` iff `t1 ⊞ t2 = t2`.
pub fn subtype(t1: &TypeExpr, t2: &TypeExpr) -> bool {
    sum_combine(t1, t2).is_ok_and(|t| t == *t2)
}

/// A typing environment with at most one binding per name.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct TypeEnv(pub BTreeMap<Name, TypeExpr>);

impl TypeEnv {
    pub fn new() -> Self {
        TypeEnv::default()
    }

    pub fn singleton(x: Name, t: TypeExpr) -> Self {
        TypeEnv(core::iter::once((x, t)).collect())
    }

    pub fn get(&self, x: &str) -> Option<&TypeExpr> {
        self.0.get(x)
    }

    /// `Γ ∪ Γ'`, undefined when a name is bound on both sides.
    pub fn disjoint_union(mut self, other: TypeEnv) -> Result<TypeEnv, TypeMismatch> {
        for (k, v) in other.0 {
            if self.0.contains_key(&k) {
                return Err(TypeMismatch::Duplicate(k));
            }
            self.0.insert(k, v);
        }
        Ok(self)
    }

    /// `Γ + Γ'`: bindings of `other` win.
    pub fn override_with(mut self, other: TypeEnv) -> TypeEnv {
        self.0.extend(other.0);
        self
    }
}

/// Matches a pattern against a type. Returns the environment of the
/// pattern variables together with the part of `t` the pattern covers
/// (sums narrowed to the matched constructor).
pub fn match_type(p: &Pattern, t: &TypeExpr) -> Result<(TypeEnv, TypeExpr), TypeMismatch> {
    match p {
        Pattern::Var(x) => Ok((TypeEnv::singleton(x.clone(), t.clone()), t.clone())),
        Pattern::Ctor(c, pats) => {
            let incompatible = || TypeMismatch::Pattern(p.clone(), t.clone());
            if t.is_void() {
                let mut env = TypeEnv::new();
                for sp in pats {
                    env = env.disjoint_union(match_type(sp, t)?.0)?;
                }
                return Ok((env, TypeExpr::void()));
            }
            let case = t.case(c).ok_or_else(incompatible)?;
            if case.params.len() != pats.len() {
                return Err(incompatible());
            }
            let mut env = TypeEnv::new();
            let mut params = Vec::with_capacity(pats.len());
            for (sp, st) in pats.iter().zip(&case.params) {
                let (e, covered) = match_type(sp, st)?;
                env = env.disjoint_union(e)?;
                params.push(covered);
            }
            Ok((
                env,
                TypeExpr::Sum(alloc::vec![SumCase {
                    ctor: c.clone(),
                    params,
                }]),
            ))
        }
    }
}

/// The type of the values a variable-free pattern matches.
pub fn closed_pattern_type(p: &Pattern) -> Option<TypeExpr> {
    match p {
        Pattern::Var(_) => None,
        Pattern::Ctor(c, args) => Some(TypeExpr::Sum(alloc::vec![SumCase {
            ctor: c.clone(),
            params: args.iter().map(closed_pattern_type).collect::<Option<_>>()?,
        }])),
    }
}

/// `C(α)`: `c` with the node addressed by `path` replaced by `Rigid(alpha)`.
pub fn build_param_type(c: &TypeExpr, path: &[PathStep], alpha: u32) -> Result<TypeExpr, TypeMismatch> {
    let Some((step, rest)) = path.split_first() else {
        return Ok(TypeExpr::Rigid(alpha));
    };
    let bad = || TypeMismatch::Path {
        path: crate::pattern::format_path(path),
        ty: c.clone(),
    };
    let TypeExpr::Sum(cases) = c else {
        return Err(bad());
    };
    let mut cases = cases.clone();
    let case = cases.iter_mut().find(|k| k.ctor == step.ctor).ok_or_else(bad)?;
    let slot = case.params.get_mut(step.index).ok_or_else(bad)?;
    *slot = build_param_type(slot, rest, alpha)?;
    Ok(TypeExpr::Sum(cases))
}

/// Every path into `t` that descends only through single-constructor sums,
/// root first, in breadth-first order.
pub fn node_paths(t: &TypeExpr) -> Vec<Path> {
    let mut out = Vec::new();
    let mut queue: alloc::collections::VecDeque<(Path, &TypeExpr)> = core::iter::once((Vec::new(), t)).collect();
    while let Some((path, ty)) = queue.pop_front() {
        if let TypeExpr::Sum(cases) = ty {
            if cases.len() == 1 {
                for (i, p) in cases[0].params.iter().enumerate() {
                    let mut child = path.clone();
                    child.push(PathStep {
                        ctor: cases[0].ctor.clone(),
                        index: i,
                    });
                    queue.push_back((child, p));
                }
            }
        }
        out.push(path);
    }
    out
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Basic(n) => f.write_str(n),
            TypeExpr::Rigid(a) => write!(f, "α{a}"),
            TypeExpr::LocalBag(t) => write!(f, "Bag_l<{t}>"),
            TypeExpr::DistBag(t) => write!(f, "Bag_d<{t}>"),
            TypeExpr::Func(a, b) => {
                if matches!(**a, TypeExpr::Func(..)) {
                    write!(f, "({a})->{b}")
                } else {
                    write!(f, "{a}->{b}")
                }
            }
            TypeExpr::Sum(cases) if cases.is_empty() => f.write_str("Void"),
            TypeExpr::Sum(_) if self.is_bool() => f.write_str("Bool"),
            TypeExpr::Sum(cases) => {
                for (i, c) in cases.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    let tuple = &*c.ctor == TUPLE;
                    if !tuple {
                        f.write_str(&c.ctor)?;
                    }
                    if tuple || !c.params.is_empty() {
                        f.write_str("(")?;
                        for (j, p) in c.params.iter().enumerate() {
                            if j > 0 {
                                f.write_str(",")?;
                            }
                            if matches!(p, TypeExpr::Func(..))
                                || matches!(p, TypeExpr::Sum(cs) if cs.len() > 1 && !p.is_bool())
                            {
                                write!(f, "({p})")?;
                            } else {
                                write!(f, "{p}")?;
                            }
                        }
                        f.write_str(")")?;
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
