//! A monoid algebra over bags with a first-class fixpoint operator.
//!
//! The crate holds everything that does not need an operating system:
//! values and bags, the expression IR with its surface syntax, the type
//! checker, the reference evaluator, aggregation functions, the rewrite
//! rules and the partitioned-execution simulator with its transfer model.

#![no_std]

extern crate alloc;

pub mod aggregation;
pub mod builtin;
pub mod dist;
pub mod eval;
pub mod expr;
pub mod optimizer;
pub mod pattern;
pub mod sample;
pub mod syntax;
pub mod typeck;
pub mod types;
pub mod value;

pub use aggregation::Delta;
pub use builtin::Builtin;
pub use eval::{EvalError, EvalLimits, Evaluator};
pub use expr::{AggKind, Aggregator, Case, Compat, Expr, Literal};
pub use pattern::{Bindings, Path, PathStep, Pattern};
pub use syntax::{parse_expr, parse_pattern, parse_program, parse_type, parse_value, Program};
pub use typeck::{TypeError, TypeRule};
pub use types::TypeExpr;
pub use value::{Bag, Name, Value};
