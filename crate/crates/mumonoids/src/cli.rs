//! The `mumonoids` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mumonoids_core::dist::{Sequential, TaskPool};
use mumonoids_core::optimizer::{apply_pdist, optimize, Context};
use mumonoids_core::syntax::pretty;
use mumonoids_core::typeck::typecheck;
use mumonoids_core::{EvalLimits, Program, Value};

use crate::generate::GraphSpec;
use crate::pool::Rayon;
use crate::programs::BenchmarkId;
use crate::report::{digest, result_size, BenchReport, BenchRun, RunReport};
use crate::{limits_from_env, read_program, resolve_inputs, run_program, Error, Inputs, PlanArg, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "mumonoids", version, about = "Fixpoint queries over distributed bags")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Typecheck a program and report fixpoints that cannot be distributed.
    Check { program: String },
    /// Apply the rewrite rules and print the resulting program.
    Optimize {
        program: String,
        /// Print the rewrite trace and the per-fixpoint plans.
        #[arg(long)]
        explain: bool,
    },
    /// Evaluate a program on a simulated cluster.
    Run {
        program: String,
        #[arg(long, value_enum, default_value_t = PlanArg::Auto)]
        plan: PlanArg,
        /// Evaluate the program as written, without rewrites.
        #[arg(long)]
        unoptimized: bool,
        #[arg(long)]
        explain: bool,
        /// Write a TOML transfer report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Compare the unoptimized program with the optimized one under each plan.
    Bench {
        program: String,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Bag size cap for the unoptimized run, which may diverge.
        #[arg(long, default_value_t = 100_000)]
        baseline_records: u64,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Write the generated inputs of a built-in benchmark to files.
    Generate {
        benchmark: BenchmarkId,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        exec: ExecArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ExecArgs {
    /// Partition count; defaults to 4 per simulated core.
    #[arg(long)]
    pub partitions: Option<usize>,
    /// Simulated cores; also the number of worker threads.
    #[arg(long, default_value_t = 1)]
    pub cores: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Read input NAME from PATH.
    #[arg(long = "input", value_name = "NAME=PATH", value_parser = parse_binding)]
    pub inputs: Vec<(String, PathBuf)>,
    /// Node count of generated graphs, for built-in benchmarks.
    #[arg(long, default_value_t = 100)]
    pub n: u64,
    /// Edge probability of generated graphs.
    #[arg(long, default_value_t = 0.02)]
    pub p: f64,
    /// Largest bag an evaluation may build before failing.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_records: u64,
}

impl ExecArgs {
    pub fn partitions(&self) -> Result<usize, Error> {
        if self.cores == 0 {
            return Err(Error::Usage("--cores must be at least 1".into()));
        }
        match self.partitions {
            Some(0) => Err(Error::Usage("--partitions must be at least 1".into())),
            Some(p) => Ok(p),
            None => Ok(4 * self.cores),
        }
    }

    fn limits(&self) -> Result<EvalLimits, Error> {
        let iter = limits_from_env()?.max_fixpoint_iterations;
        EvalLimits::new(iter, self.max_records).map_err(|_| Error::Usage("--max-records must be at least 1".into()))
    }

    fn graph(&self) -> Result<GraphSpec, Error> {
        Ok(GraphSpec::new(self.n, self.p, self.seed)?)
    }

    fn pool(&self) -> Result<Box<dyn TaskPool>, Error> {
        if self.cores <= 1 {
            return Ok(Box::new(Sequential));
        }
        Rayon::new(self.cores)
            .map(|p| Box::new(p) as Box<dyn TaskPool>)
            .map_err(|e| Error::Internal(e.to_string()))
    }
}

fn parse_binding(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected NAME=PATH, got `{s}`")),
    }
}

/// A program given on the command line: a file, or a built-in benchmark.
pub struct Loaded {
    pub label: String,
    pub program: Program,
    pub base: PathBuf,
    pub builtin: Option<BenchmarkId>,
}

pub fn load(arg: &str) -> Result<Loaded, Error> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(Loaded {
            label: path
                .file_stem()
                .map_or_else(|| arg.to_string(), |s| s.to_string_lossy().into_owned()),
            program: read_program(path)?,
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            builtin: None,
        });
    }
    match arg.parse::<BenchmarkId>() {
        Ok(id) => Ok(Loaded {
            label: id.name().to_string(),
            program: id.program(),
            base: PathBuf::from("."),
            builtin: Some(id),
        }),
        Err(_) => Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or built-in benchmark"),
        }),
    }
}

fn inputs_for(loaded: &Loaded, exec: &ExecArgs, limits: EvalLimits) -> Result<Inputs, Error> {
    let overrides: BTreeMap<String, PathBuf> = exec.inputs.iter().cloned().collect();
    let generated = match loaded.builtin {
        Some(id) => Some(id.dataset(exec.graph()?)),
        None => None,
    };
    resolve_inputs(&loaded.program, &loaded.base, &overrides, generated.as_ref(), limits)
}

fn out_err(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn print_value(out: &mut dyn Write, v: &Value) -> std::io::Result<()> {
    match v.as_bag() {
        Some(b) => b.instances().try_for_each(|x| writeln!(out, "{x}")),
        None => writeln!(out, "{v}"),
    }
}

fn check(loaded: &Loaded, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    let types = loaded.program.input_types();
    let t = typecheck(&types, &loaded.program.body)?;
    for d in &loaded.program.inputs {
        writeln!(out, "input {} : {}", d.name, d.ty).map_err(out_err)?;
    }
    writeln!(out, "result : {t}").map_err(out_err)?;
    let (directives, _) = apply_pdist(&Context::new(&types), &loaded.program.body);
    for d in directives {
        writeln!(out, "fixpoint {}: {}", d.site, d.plan).map_err(out_err)?;
        if let Some(w) = d.warning {
            writeln!(err, "warning: fixpoint {}: {w}", d.site).map_err(out_err)?;
        }
    }
    Ok(())
}

fn explain(o: &mumonoids_core::optimizer::Optimized, out: &mut dyn Write) -> std::io::Result<()> {
    write!(out, "{}", o.trace)?;
    for d in &o.directives {
        writeln!(out, "plan fixpoint {}: {}", d.site, d.plan)?;
    }
    Ok(())
}

/// Runs the unoptimized program under P1, then the optimized program under
/// P1, P2 and the planner's choice. A run that fails (typically by hitting
/// a limit) is recorded with its error instead of aborting the benchmark.
/// The unoptimized run uses `baseline`, since it can diverge where the
/// rewritten program does not.
#[allow(clippy::too_many_arguments)]
pub fn bench(
    label: &str,
    program: &Program,
    inputs: &Inputs,
    g: GraphSpec,
    partitions: usize,
    limits: EvalLimits,
    baseline: EvalLimits,
    pool: &dyn TaskPool,
) -> Result<BenchReport, Error> {
    typecheck(&program.input_types(), &program.body)?;
    let configs = [
        ("unoptimized-P1", PlanArg::P1, false),
        ("P1", PlanArg::P1, true),
        ("P2", PlanArg::P2, true),
        ("auto", PlanArg::Auto, true),
    ];
    let mut runs = Vec::new();
    for (name, plan, optimize) in configs {
        let opts = RunOptions {
            plan,
            optimize,
            partitions,
            seed: g.seed(),
            limits: if optimize { limits } else { baseline },
        };
        let start = std::time::Instant::now();
        let run = match run_program(program, inputs, &opts, pool) {
            Ok(o) => BenchRun {
                label: name.to_string(),
                plan: plan.name().to_string(),
                optimized: optimize,
                status: "ok".to_string(),
                result_size: result_size(&o.result),
                result_digest: digest(&o.result),
                iterations: o.reports.iter().map(|r| r.report.iterations).sum(),
                records_shuffled: o.records_shuffled(),
                wall_ms: o.elapsed.as_secs_f64() * 1e3,
            },
            Err(e @ Error::Eval(_)) => BenchRun {
                label: name.to_string(),
                plan: plan.name().to_string(),
                optimized: optimize,
                status: e.to_string(),
                result_size: 0,
                result_digest: String::new(),
                iterations: 0,
                records_shuffled: 0,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            },
            Err(e) => return Err(e),
        };
        runs.push(run);
    }
    Ok(BenchReport {
        program: label.to_string(),
        n: g.n(),
        p: g.p(),
        seed: g.seed(),
        partitions: partitions as u64,
        runs,
    })
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    match cli.command {
        Command::Check { program } => check(&load(&program)?, out, err),
        Command::Optimize { program, explain: show } => {
            let loaded = load(&program)?;
            let o = optimize(&loaded.program.input_types(), &loaded.program.body)?;
            if show {
                explain(&o, out).map_err(out_err)?;
            }
            writeln!(out, "{}", pretty(&o.expr)).map_err(out_err)
        }
        Command::Run {
            program,
            plan,
            unoptimized,
            explain: show,
            report,
            exec,
        } => {
            let limits = exec.limits()?;
            let loaded = load(&program)?;
            let inputs = inputs_for(&loaded, &exec, limits)?;
            let opts = RunOptions {
                plan,
                optimize: !unoptimized,
                partitions: exec.partitions()?,
                seed: exec.seed,
                limits,
            };
            let pool = exec.pool()?;
            let o = run_program(&loaded.program, &inputs, &opts, pool.as_ref())?;
            if show {
                if let Some(opt) = &o.optimized {
                    explain(opt, err).map_err(out_err)?;
                }
            }
            print_value(out, &o.result).map_err(out_err)?;
            if let Some(path) = report {
                let r = RunReport::new(
                    &loaded.label,
                    plan.name(),
                    opts.optimize,
                    opts.partitions,
                    opts.seed,
                    &o,
                );
                write_file(&path, &r.to_toml())?;
            }
            Ok(())
        }
        Command::Bench {
            program,
            report,
            baseline_records,
            exec,
        } => {
            let limits = exec.limits()?;
            let baseline = EvalLimits::new(limits.max_fixpoint_iterations, baseline_records)
                .map_err(|_| Error::Usage("--baseline-records must be at least 1".into()))?;
            let loaded = load(&program)?;
            let inputs = inputs_for(&loaded, &exec, limits)?;
            let pool = exec.pool()?;
            let r = bench(
                &loaded.label,
                &loaded.program,
                &inputs,
                exec.graph()?,
                exec.partitions()?,
                limits,
                baseline,
                pool.as_ref(),
            )?;
            let text = r.to_toml();
            write!(out, "{text}").map_err(out_err)?;
            if let Some(path) = report {
                write_file(&path, &text)?;
            }
            Ok(())
        }
        Command::Generate {
            benchmark,
            out: dir,
            exec,
        } => {
            let program = benchmark.program();
            let data = benchmark.dataset(exec.graph()?);
            std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
                path: dir.clone(),
                source,
            })?;
            for decl in &program.inputs {
                let ext = match decl.ty.bag_elem().map(crate::datasets::Format::for_elem) {
                    Some(crate::datasets::Format::Values) => "txt",
                    _ => "tsv",
                };
                let path = dir.join(format!("{}.{ext}", decl.name));
                crate::datasets::save(&path, &data[&*decl.name], &decl.ty)?;
                writeln!(out, "{}", path.display()).map_err(out_err)?;
            }
            Ok(())
        }
    }
}

/// Parses `args` and runs the command, returning the exit status.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
