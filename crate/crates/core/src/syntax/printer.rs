use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::builtin::Builtin;
use crate::expr::{AggKind, Aggregator, Compat, Expr, Literal};
use crate::pattern::Pattern;
use crate::value::{Value, TUPLE};

/// Prints a term in fully parenthesized form; parsing the output yields
/// the same term.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e);
    out
}

pub fn print_pattern(p: &Pattern) -> String {
    p.to_string()
}

pub fn print_aggregator(a: &Aggregator) -> String {
    let mut out = String::new();
    aggregator(&mut out, a);
    out
}

/// Like [`print_expr`] but puts each binding of a top-level `let` chain on
/// its own line.
pub fn pretty(e: &Expr) -> String {
    let mut out = String::new();
    let mut cur = e;
    while let Expr::Let(x, bound, body) = cur {
        out.push_str(&format!("let {x} = {} in\n", print_expr(bound)));
        cur = body;
    }
    out.push_str(&print_expr(cur));
    out
}

fn literal(out: &mut String, l: &Literal) {
    let text = l.to_value().to_string();
    let negative = match l {
        Literal::Int(i) => *i < 0,
        Literal::Float(f) => f.0.is_sign_negative() && !f.0.is_nan(),
        Literal::Str(_) => false,
    };
    if negative {
        out.push('(');
        out.push_str(&text);
        out.push(')');
    } else {
        out.push_str(&text);
    }
}

fn builtin(out: &mut String, b: Builtin) {
    if b.is_infix() {
        out.push('(');
        out.push_str(b.symbol());
        out.push(')');
    } else {
        out.push_str(b.symbol());
    }
}

fn list(out: &mut String, items: &[&Expr]) {
    for (i, e) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, e);
    }
}

fn call(out: &mut String, head: &str, args: &[&Expr]) {
    out.push_str(head);
    out.push('(');
    list(out, args);
    out.push(')');
}

fn expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Lit(l) => literal(out, l),
        Expr::Builtin(b) => builtin(out, *b),
        Expr::Var(x) => out.push_str(x),
        Expr::Empty => out.push_str("{}"),
        Expr::Singleton(x) => {
            out.push('{');
            expr(out, x);
            out.push('}');
        }
        Expr::Lambda(cases) => {
            out.push_str("(\\");
            for (i, c) in cases.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                out.push_str(&c.pattern.to_string());
                out.push_str(" -> ");
                expr(out, &c.body);
            }
            out.push(')');
        }
        Expr::Apply(f, a) => {
            if let Some((c, t, el)) = e.as_if() {
                out.push_str("(if ");
                expr(out, c);
                out.push_str(" then ");
                expr(out, t);
                out.push_str(" else ");
                expr(out, el);
                out.push(')');
                return;
            }
            if let Expr::Apply(g, lhs) = &**f {
                if let Expr::Builtin(op) = &**g {
                    if op.is_infix() {
                        out.push('(');
                        expr(out, lhs);
                        out.push(' ');
                        out.push_str(op.symbol());
                        out.push(' ');
                        expr(out, a);
                        out.push(')');
                        return;
                    }
                }
            }
            out.push('(');
            if absorbs_parens(f) {
                out.push('(');
                expr(out, f);
                out.push(')');
            } else {
                expr(out, f);
            }
            out.push(' ');
            expr(out, a);
            out.push(')');
        }
        Expr::Construct(c, args) => {
            let args: Vec<&Expr> = args.iter().collect();
            if &**c == TUPLE && args.len() >= 2 {
                out.push('(');
                list(out, &args);
                out.push(')');
            } else if args.is_empty() {
                out.push_str(c);
            } else {
                call(out, c, &args);
            }
        }
        Expr::Flatmap(f, x) => call(out, "flatmap", &[f, x]),
        Expr::Reduce { op, zero, src } => call(out, "reduce", &[op, zero, src]),
        Expr::ReduceByKey { op, src, compat } => {
            call(out, "reduceByKey", &[op, src]);
            compat_suffix(out, compat);
        }
        Expr::Cogroup(a, b) => call(out, "cogroup", &[a, b]),
        Expr::Join(a, b) => call(out, "join", &[a, b]),
        Expr::Fixpoint { delta, seed, phi } => {
            out.push_str("mu[");
            aggregator(out, delta);
            out.push(']');
            call(out, "", &[seed, phi]);
        }
        Expr::Aggregate(d, x) => {
            if d.is_distinct() && d.compatible_with.is_empty() {
                call(out, "distinct", &[x]);
            } else {
                out.push_str("aggregate[");
                aggregator(out, d);
                out.push(']');
                call(out, "", &[x]);
            }
        }
        Expr::Dist(x) => call(out, "dist", &[x]),
        Expr::Let(x, bound, body) => {
            out.push_str("(let ");
            out.push_str(x);
            out.push_str(" = ");
            expr(out, bound);
            out.push_str(" in ");
            expr(out, body);
            out.push(')');
        }
    }
}

/// Terms that would swallow a following parenthesized argument: `C (x)`
/// reads as a constructor call, `@compatible (x)` as a name list.
fn absorbs_parens(f: &Expr) -> bool {
    match f {
        Expr::Construct(_, args) => args.is_empty(),
        Expr::ReduceByKey { compat, .. } => compat.0.len() == 1 && compat.0.contains("*"),
        _ => false,
    }
}

fn compat_suffix(out: &mut String, c: &Compat) {
    if c.is_empty() {
        return;
    }
    out.push_str(" @compatible");
    if c.0.len() == 1 && c.0.contains("*") {
        return;
    }
    out.push('(');
    let names: Vec<&str> = c.0.iter().map(|n| &**n).collect();
    out.push_str(&names.join(", "));
    out.push(')');
}

fn aggregator(out: &mut String, a: &Aggregator) {
    match &a.kind {
        AggKind::Identity => out.push_str("identity"),
        AggKind::Distinct => out.push_str("distinct"),
        AggKind::ByKey { op, pattern } => {
            let head = match op {
                Builtin::Min => "minByKey",
                Builtin::Max => "maxByKey",
                Builtin::Add => "sumByKey",
                other => {
                    out.push_str("byKey(");
                    builtin(out, *other);
                    out.push_str(&format!(", {pattern})"));
                    return compat_suffix(out, &a.compatible_with);
                }
            };
            out.push_str(&format!("{head}({pattern})"));
        }
        AggKind::Filter {
            pattern,
            var,
            predicate,
        } => {
            out.push_str(&format!("filter({pattern}, {var}, "));
            expr(out, predicate);
            out.push(')');
        }
    }
    compat_suffix(out, &a.compatible_with);
}

impl Value {
    /// Source text that evaluates to this value.
    pub fn to_expr_text(&self) -> String {
        match self {
            Value::Bag(b) if b.is_empty() => String::from("{}"),
            Value::Bag(b) => {
                let parts: Vec<String> = b.instances().map(|v| format!("{{{}}}", v.to_expr_text())).collect();
                format!("({})", parts.join(" ++ "))
            }
            Value::Constructed(c, args) if !args.is_empty() => {
                let parts: Vec<String> = args.iter().map(Value::to_expr_text).collect();
                format!("{c}({})", parts.join(", "))
            }
            Value::Int(i) if *i < 0 => format!("({i})"),
            Value::Float(f) if f.0.is_sign_negative() => format!("({self})"),
            _ => self.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expr, parse_program, parse_value, Sugar};
    use super::*;

    fn round_trip(src: &str) -> Expr {
        let e = parse_expr(src).unwrap();
        let printed = print_expr(&e);
        assert_eq!(parse_expr(&printed).unwrap(), e, "{printed}");
        e
    }

    #[test]
    fn transitive_closure_program() {
        let p = parse_program(
            "input R : Bag_d<(Int, Int)>;\n\
             let reverse_edges = \\(a, b) -> {(b, a)} in\n\
             let drop_mid = \\(mid, (src, dest)) -> {(src, dest)} in\n\
             mu(R, \\X -> flatmap(drop_mid, join(flatmap(reverse_edges, X), R)))",
        )
        .unwrap();
        assert_eq!(p.inputs.len(), 1);
        assert!(p.desugared.iter().any(|d| d.sugar == Sugar::DefaultDelta));
        let printed = pretty(&p.body);
        assert!(printed.starts_with("let reverse_edges = "));
        assert_eq!(parse_expr(&printed).unwrap(), p.body);
    }

    #[test]
    fn operators_and_sugar() {
        let e = round_trip("1 + 2 * 3 - 4");
        assert_eq!(
            e,
            Expr::binop(
                Builtin::Sub,
                Expr::binop(
                    Builtin::Add,
                    Expr::int(1),
                    Expr::binop(Builtin::Mul, Expr::int(2), Expr::int(3))
                ),
                Expr::int(4)
            )
        );
        round_trip("if a < b && not c then {a, b, -3} else {}");
        round_trip("groupBy(R)");
        round_trip("reduceByKey(min, R) @compatible(phi)");
        round_trip("mu[minByKey((k, v)) @compatible](R, \\X -> X)");
        round_trip("aggregate[filter((a, b), b, b > 2)](R)");
        round_trip("mu[byKey(bestRated, (k, v))](R, \\X -> X)");
        round_trip("aggregate[byKey((++)) @compatible(f, g)](R)");
        round_trip("\\Tuple(x) -> x | Foo -> -inf");
        round_trip("(+) 1 2.5e-3");
        round_trip("let f = \\x -> \\y -> x ++ y in f {\"a\\\"\"} {}");
    }

    #[test]
    fn rejects_bad_terms() {
        assert!(parse_expr("\\(x, x) -> x").is_err());
        assert!(parse_expr("a < b < c").is_err());
        assert!(parse_expr("flatmap(f)").is_err());
        assert!(parse_expr("mu[sometimes](R, f)").is_err());
        let err = parse_expr("let = 3 in x").unwrap_err();
        assert_eq!((err.line, err.col), (1, 5));
    }

    #[test]
    fn values() {
        let v = parse_value("{Tuple(1,2), (1, 2), \"s\", -2.5, True}").unwrap();
        let b = v.as_bag().unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(b.multiplicity(&Value::pair(Value::int(1), Value::int(2))), 2);
        assert_eq!(parse_value(&v.to_string()).unwrap(), v);
        let e = parse_expr(&v.to_expr_text()).unwrap();
        let got = crate::eval::Evaluator::default()
            .eval_value(&Default::default(), &e)
            .unwrap();
        assert_eq!(got, v);
    }
}
