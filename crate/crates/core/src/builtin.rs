//! The closed set of builtin constant functions.

use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;

use crate::value::{Bag, Value, F64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Builtin {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Neq,
    And,
    Or,
    Not,
    /// `contains w c`: the string `w` contains the string `c`.
    Contains,
    /// `++`, bag union.
    BagUnion,
    /// `union`, bag union followed by duplicate removal.
    SetUnion,
    /// Picks the landmark bag with the larger total rating.
    BestRated,
}

pub const ALL: [Builtin; 19] = [
    Builtin::Add,
    Builtin::Sub,
    Builtin::Mul,
    Builtin::Div,
    Builtin::Min,
    Builtin::Max,
    Builtin::Lt,
    Builtin::Le,
    Builtin::Gt,
    Builtin::Ge,
    Builtin::Eq,
    Builtin::Neq,
    Builtin::And,
    Builtin::Or,
    Builtin::Not,
    Builtin::Contains,
    Builtin::BagUnion,
    Builtin::SetUnion,
    Builtin::BestRated,
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuiltinError {
    #[error("builtin `{op}` cannot be applied to {args}")]
    WrongKind { op: Builtin, args: String },
    #[error("integer overflow in `{0}`")]
    Overflow(Builtin),
    #[error("division by zero")]
    DivisionByZero,
}

impl Builtin {
    pub fn arity(self) -> usize {
        match self {
            Builtin::Not => 1,
            _ => 2,
        }
    }

    /// Operator or identifier spelling used by the surface syntax.
    pub fn symbol(self) -> &'static str {
        match self {
            Builtin::Add => "+",
            Builtin::Sub => "-",
            Builtin::Mul => "*",
            Builtin::Div => "/",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Lt => "<",
            Builtin::Le => "<=",
            Builtin::Gt => ">",
            Builtin::Ge => ">=",
            Builtin::Eq => "==",
            Builtin::Neq => "!=",
            Builtin::And => "&&",
            Builtin::Or => "||",
            Builtin::Not => "not",
            Builtin::Contains => "contains",
            Builtin::BagUnion => "++",
            Builtin::SetUnion => "union",
            Builtin::BestRated => "bestRated",
        }
    }

    /// Builtins written as identifiers rather than infix symbols.
    pub fn from_ident(s: &str) -> Option<Builtin> {
        Some(match s {
            "min" => Builtin::Min,
            "max" => Builtin::Max,
            "not" => Builtin::Not,
            "contains" => Builtin::Contains,
            "union" => Builtin::SetUnion,
            "bestRated" => Builtin::BestRated,
            _ => return None,
        })
    }

    pub fn is_infix(self) -> bool {
        Builtin::from_ident(self.symbol()).is_none()
    }

    pub fn apply(self, args: &[Value]) -> Result<Value, BuiltinError> {
        debug_assert_eq!(args.len(), self.arity());
        let wrong = || BuiltinError::WrongKind {
            op: self,
            args: describe(args),
        };
        use Value::{Float, Int, Str};
        match self {
            Builtin::Add => match (&args[0], &args[1]) {
                (Int(a), Int(b)) => a.checked_add(*b).map(Int).ok_or(BuiltinError::Overflow(self)),
                (Float(a), Float(b)) => Ok(Value::float(a.0 + b.0)),
                (Str(a), Str(b)) => {
                    let mut s = String::with_capacity(a.len() + b.len());
                    s.push_str(a);
                    s.push_str(b);
                    Ok(Str(Arc::from(s)))
                }
                _ => Err(wrong()),
            },
            Builtin::Sub => match (&args[0], &args[1]) {
                (Int(a), Int(b)) => a.checked_sub(*b).map(Int).ok_or(BuiltinError::Overflow(self)),
                (Float(a), Float(b)) => Ok(Value::float(a.0 - b.0)),
                _ => Err(wrong()),
            },
            Builtin::Mul => match (&args[0], &args[1]) {
                (Int(a), Int(b)) => a.checked_mul(*b).map(Int).ok_or(BuiltinError::Overflow(self)),
                (Float(a), Float(b)) => Ok(Value::float(a.0 * b.0)),
                _ => Err(wrong()),
            },
            Builtin::Div => match (&args[0], &args[1]) {
                (Int(_), Int(0)) => Err(BuiltinError::DivisionByZero),
                (Int(a), Int(b)) => a.checked_div(*b).map(Int).ok_or(BuiltinError::Overflow(self)),
                (Float(a), Float(b)) => Ok(Value::float(a.0 / b.0)),
                _ => Err(wrong()),
            },
            Builtin::Min | Builtin::Max => {
                if !comparable(&args[0], &args[1]) {
                    return Err(wrong());
                }
                let pick_first = (args[0] <= args[1]) == (self == Builtin::Min);
                Ok(if pick_first { args[0].clone() } else { args[1].clone() })
            }
            Builtin::Lt | Builtin::Le | Builtin::Gt | Builtin::Ge => {
                if !comparable(&args[0], &args[1]) {
                    return Err(wrong());
                }
                let (a, b) = (&args[0], &args[1]);
                Ok(Value::bool(match self {
                    Builtin::Lt => a < b,
                    Builtin::Le => a <= b,
                    Builtin::Gt => a > b,
                    _ => a >= b,
                }))
            }
            Builtin::Eq => Ok(Value::bool(args[0] == args[1])),
            Builtin::Neq => Ok(Value::bool(args[0] != args[1])),
            Builtin::And | Builtin::Or => match (args[0].as_bool(), args[1].as_bool()) {
                (Some(a), Some(b)) => Ok(Value::bool(if self == Builtin::And { a && b } else { a || b })),
                _ => Err(wrong()),
            },
            Builtin::Not => args[0].as_bool().map(|b| Value::bool(!b)).ok_or_else(wrong),
            Builtin::Contains => match (&args[0], &args[1]) {
                (Str(w), Str(c)) => Ok(Value::bool(w.contains(&**c))),
                _ => Err(wrong()),
            },
            Builtin::BagUnion | Builtin::SetUnion => match (&args[0], &args[1]) {
                (Value::Bag(a), Value::Bag(b)) => {
                    let u = a.union(b);
                    Ok(Value::Bag(if self == Builtin::SetUnion { u.distinct() } else { u }))
                }
                _ => Err(wrong()),
            },
            Builtin::BestRated => match (&args[0], &args[1]) {
                (Value::Bag(a), Value::Bag(b)) => {
                    let (ra, rb) = (rating(a).ok_or_else(wrong)?, rating(b).ok_or_else(wrong)?);
                    let first = ra > rb || (ra == rb && tie_break(a, b));
                    Ok(Value::Bag(if first { a.clone() } else { b.clone() }))
                }
                _ => Err(wrong()),
            },
        }
    }
}

fn comparable(a: &Value, b: &Value) -> bool {
    matches!(
        (a, b),
        (Value::Int(_), Value::Int(_)) | (Value::Float(_), Value::Float(_)) | (Value::Str(_), Value::Str(_))
    )
}

/// Sum of ratings of a bag of `Landmark(name, rating)` values.
/// Among equally rated bags, the one with more copies of the largest
/// element where the two differ. Adding the same landmarks to both sides
/// never changes the outcome, so by-key aggregation with this operator
/// commutes with path concatenation.
fn tie_break(a: &Bag, b: &Bag) -> bool {
    let mut ia = a.iter().rev().peekable();
    let mut ib = b.iter().rev().peekable();
    loop {
        match (ia.peek(), ib.peek()) {
            (None, None) => return true,
            (Some(_), None) => return true,
            (None, Some(_)) => return false,
            (Some((va, na)), Some((vb, nb))) => match va.cmp(vb) {
                core::cmp::Ordering::Greater => return true,
                core::cmp::Ordering::Less => return false,
                core::cmp::Ordering::Equal if na != nb => return na > nb,
                core::cmp::Ordering::Equal => {
                    ia.next();
                    ib.next();
                }
            },
        }
    }
}

fn rating(b: &Bag) -> Option<i64> {
    let mut total = 0i64;
    for (v, n) in b.iter() {
        match v {
            Value::Constructed(c, args) if &**c == "Landmark" && args.len() == 2 => {
                total = total.checked_add(args[1].as_int()?.checked_mul(*n as i64)?)?;
            }
            _ => return None,
        }
    }
    Some(total)
}

fn describe(args: &[Value]) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let kind = match a {
            Value::Int(_) => "Int",
            Value::Float(_) => "Float",
            Value::Str(_) => "String",
            Value::Constructed(..) => "constructed value",
            Value::Bag(_) => "bag",
        };
        let _ = write!(s, "{kind} `{a}`");
    }
    s
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Positive infinity, used as the neutral element of `min` over floats.
pub fn infinity() -> Value {
    Value::Float(F64(f64::INFINITY))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn curried_plus_reaches_eleven() {
        let five = Builtin::Add.apply(&[Value::Int(1), Value::Int(4)]).unwrap();
        assert_eq!(Builtin::Add.apply(&[five, Value::Int(6)]).unwrap(), Value::Int(11));
    }

    #[test]
    fn string_append_and_contains() {
        let ab = Builtin::Add.apply(&[Value::str("a"), Value::str("b")]).unwrap();
        assert_eq!(ab, Value::str("ab"));
        assert_eq!(
            Builtin::Contains.apply(&[ab, Value::str("b")]).unwrap(),
            Value::bool(true)
        );
    }

    #[test]
    fn wrong_kind_is_reported() {
        let err = Builtin::Add.apply(&[Value::Int(1), Value::str("x")]).unwrap_err();
        assert!(matches!(err, BuiltinError::WrongKind { .. }));
        assert!(Builtin::Div.apply(&[Value::Int(1), Value::Int(0)]).is_err());
    }

    #[test]
    fn best_rated_is_commutative_on_ties() {
        let lm = |n: &str, r| Value::constructed("Landmark", vec![Value::str(n), Value::Int(r)]);
        let a = Value::Bag(Bag::singleton(lm("a", 3)));
        let b = Value::Bag(Bag::singleton(lm("b", 3)));
        let c = Value::Bag(Bag::singleton(lm("c", 5)));
        assert_eq!(
            Builtin::BestRated.apply(&[a.clone(), b.clone()]).unwrap(),
            Builtin::BestRated.apply(&[b, a.clone()]).unwrap()
        );
        assert_eq!(Builtin::BestRated.apply(&[a, c.clone()]).unwrap(), c);
    }

    #[test]
    fn best_rated_ties_survive_common_extensions() {
        let lm = |n: &str, r| Value::constructed("Landmark", vec![Value::str(n), Value::Int(r)]);
        let bag = |xs: &[(&str, i64)]| xs.iter().map(|&(n, r)| lm(n, r)).collect::<Bag>();
        let (a, b) = (bag(&[("a", 2), ("d", 1)]), bag(&[("b", 1), ("c", 2)]));
        let winner = Builtin::BestRated
            .apply(&[Value::Bag(a.clone()), Value::Bag(b.clone())])
            .unwrap();
        for extra in [bag(&[("e", 0)]), bag(&[("a", 0), ("z", 4)]), bag(&[("c", 2)])] {
            let (ax, bx) = (a.union(&extra), b.union(&extra));
            let w = Builtin::BestRated
                .apply(&[Value::Bag(bx), Value::Bag(ax.clone())])
                .unwrap();
            assert_eq!(w == Value::Bag(ax), winner == Value::Bag(a.clone()));
        }
    }

    #[test]
    fn identifiers_round_trip() {
        for b in ALL {
            if !b.is_infix() {
                assert_eq!(Builtin::from_ident(b.symbol()), Some(b));
            }
        }
    }
}
