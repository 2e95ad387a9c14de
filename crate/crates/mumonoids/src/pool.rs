//! Partition tasks on a rayon thread pool.

use mumonoids_core::dist::{LocalRun, TaskPool};
use mumonoids_core::EvalError;
use rayon::prelude::*;

/// Runs the per-partition fixpoints of P2 in parallel. Results are
/// collected in partition order, so merges stay deterministic.
pub struct Rayon {
    pool: rayon::ThreadPool,
}

impl Rayon {
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        Ok(Rayon {
            pool: rayon::ThreadPoolBuilder::new().num_threads(threads).build()?,
        })
    }
}

impl TaskPool for Rayon {
    fn run_all(
        &self,
        tasks: usize,
        task: &(dyn Fn(usize) -> Result<LocalRun, EvalError> + Sync),
    ) -> Vec<Result<LocalRun, EvalError>> {
        self.pool.install(|| (0..tasks).into_par_iter().map(task).collect())
    }
}
