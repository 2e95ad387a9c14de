//! File formats, dataset generators, the benchmark programs and the
//! command-line driver for `mumonoids-core`.

pub mod cli;
pub mod datasets;
pub mod generate;
pub mod pool;
pub mod programs;
pub mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use mumonoids_core::dist::{DistError, PlanChoice, Simulator, SiteReport, TaskPool};
use mumonoids_core::eval::Env;
use mumonoids_core::optimizer::{optimize, OptimizeError, Optimized};
use mumonoids_core::syntax::{InputSource, SyntaxError};
use mumonoids_core::typeck::typecheck;
use mumonoids_core::{Bag, EvalError, EvalLimits, Evaluator, Program, TypeError, Value};

use crate::datasets::DatasetError;
use crate::generate::GenError;

/// Input bags by name.
pub type Inputs = BTreeMap<String, Bag>;

/// Default cap on fixpoint iterations; `MUMONOIDS_MAX_ITER` overrides it.
pub const DEFAULT_MAX_ITER: u64 = 1000;
pub const MAX_ITER_VAR: &str = "MUMONOIDS_MAX_ITER";

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error("{0}")]
    Usage(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<DistError> for Error {
    fn from(e: DistError) -> Self {
        Error::Eval(e.into())
    }
}

impl Error {
    /// Process exit status for the error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Generate(_) => 2,
            Error::Syntax(_) => 3,
            Error::Type(_) | Error::Optimize(OptimizeError::Input(_)) => 4,
            Error::Eval(EvalError::IterationLimit { .. } | EvalError::CardinalityLimit { .. }) => 6,
            Error::Eval(EvalError::Soundness(_)) => 8,
            Error::Eval(_) => 5,
            Error::Io { .. } | Error::Dataset(_) => 7,
            Error::Optimize(OptimizeError::Internal { .. }) | Error::Internal(_) => 8,
        }
    }
}

/// Limits with the iteration cap taken from `value` (the environment
/// variable's content) when present.
pub fn limits_from(value: Option<&str>) -> Result<EvalLimits, Error> {
    let max = match value {
        None => DEFAULT_MAX_ITER,
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{MAX_ITER_VAR} must be a positive integer, got `{s}`")))?,
    };
    EvalLimits::new(max, EvalLimits::default().max_bag_cardinality)
        .map_err(|_| Error::Usage(format!("{MAX_ITER_VAR} must be a positive integer, got `{max}`")))
}

pub fn limits_from_env() -> Result<EvalLimits, Error> {
    limits_from(std::env::var(MAX_ITER_VAR).ok().as_deref())
}

pub fn read_program(path: &Path) -> Result<Program, Error> {
    let src = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(mumonoids_core::parse_program(&src)?)
}

/// Loads every declared input: an explicit `overrides` entry first, then
/// the declaration's own source. File paths are relative to `base`.
pub fn resolve_inputs(
    program: &Program,
    base: &Path,
    overrides: &BTreeMap<String, PathBuf>,
    generated: Option<&Inputs>,
    limits: EvalLimits,
) -> Result<Inputs, Error> {
    let mut out = Inputs::new();
    for decl in &program.inputs {
        let name = decl.name.to_string();
        let bag = if let Some(path) = overrides.get(&name) {
            datasets::load(path, &decl.ty)?
        } else if let Some(b) = generated.and_then(|g| g.get(&name)) {
            b.clone()
        } else {
            match &decl.source {
                InputSource::File(p) => datasets::load(&base.join(p), &decl.ty)?,
                InputSource::Inline(e) => {
                    let v = Evaluator::new(limits).eval_value(&Env::new(), e)?;
                    if !decl.ty.admits(&v) {
                        return Err(Error::Usage(format!("input `{name}`: {v} is not a {}", decl.ty)));
                    }
                    v.into_bag()
                        .ok_or_else(|| Error::Usage(format!("input `{name}` is not a bag")))?
                }
                InputSource::External => {
                    return Err(Error::Usage(format!(
                        "no data for input `{name}`; pass --input {name}=PATH"
                    )))
                }
            }
        };
        out.insert(name, bag);
    }
    for name in overrides.keys() {
        if !program.inputs.iter().any(|d| &*d.name == name) {
            return Err(Error::Usage(format!("the program declares no input `{name}`")));
        }
    }
    Ok(out)
}

pub fn env_of(inputs: &Inputs) -> Env {
    inputs
        .iter()
        .map(|(k, v)| (k.as_str(), Value::Bag(v.clone())))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlanArg {
    /// The reference evaluator, no partitioning.
    Local,
    P1,
    P2,
    /// The optimizer's per-fixpoint plans.
    Auto,
}

impl PlanArg {
    pub fn name(self) -> &'static str {
        match self {
            PlanArg::Local => "local",
            PlanArg::P1 => "p1",
            PlanArg::P2 => "p2",
            PlanArg::Auto => "auto",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub plan: PlanArg,
    pub optimize: bool,
    pub partitions: usize,
    pub seed: u64,
    pub limits: EvalLimits,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: Value,
    pub reports: Vec<SiteReport>,
    pub optimized: Option<Optimized>,
    pub elapsed: Duration,
}

impl RunOutcome {
    pub fn records_shuffled(&self) -> u64 {
        self.reports.iter().map(|r| r.report.records_shuffled).sum()
    }
}

/// Typechecks, optionally rewrites, and evaluates `program` under the
/// chosen plan.
pub fn run_program(
    program: &Program,
    inputs: &Inputs,
    opts: &RunOptions,
    pool: &dyn TaskPool,
) -> Result<RunOutcome, Error> {
    let types = program.input_types();
    typecheck(&types, &program.body)?;
    let optimized = if opts.optimize || opts.plan == PlanArg::Auto {
        Some(optimize(&types, &program.body)?)
    } else {
        None
    };
    let expr = match (&optimized, opts.optimize) {
        (Some(o), true) => &o.expr,
        _ => &program.body,
    };
    let choice = match opts.plan {
        PlanArg::Local => None,
        PlanArg::P1 => Some(PlanChoice::P1),
        PlanArg::P2 => Some(PlanChoice::P2),
        PlanArg::Auto => {
            let plans = if opts.optimize {
                optimized.as_ref().map(Optimized::plans).unwrap_or_default()
            } else {
                mumonoids_core::optimizer::apply_pdist(&mumonoids_core::optimizer::Context::new(&types), expr)
                    .0
                    .into_iter()
                    .map(|d| (d.site, d.plan))
                    .collect()
            };
            Some(PlanChoice::Directed(plans))
        }
    };
    let env = env_of(inputs);
    let start = Instant::now();
    let (result, reports) = match choice {
        None => (Evaluator::new(opts.limits).eval_value(&env, expr)?, Vec::new()),
        Some(choice) => {
            let sim = Simulator::new(expr, opts.partitions, opts.seed, choice, pool)?;
            let v = Evaluator::with_runner(opts.limits, &sim).eval_value(&env, expr)?;
            (v, sim.reports())
        }
    };
    Ok(RunOutcome {
        result,
        reports,
        optimized,
        elapsed: start.elapsed(),
    })
}
