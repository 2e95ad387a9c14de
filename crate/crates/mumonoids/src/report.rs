//! TOML reports for `run` and `bench`.

use std::hash::Hasher;

use mumonoids_core::dist::TransferReport;
use mumonoids_core::Value;
use serde::Serialize;

use crate::RunOutcome;

/// FNV-1a of the canonical text of `v`, in hex.
pub fn digest(v: &Value) -> String {
    let mut h = fnv::FnvHasher::default();
    h.write(v.to_string().as_bytes());
    format!("{:016x}", h.finish())
}

pub fn result_size(v: &Value) -> u64 {
    v.as_bag().map_or(1, |b| b.len())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixpointEntry {
    pub site: usize,
    #[serde(flatten)]
    pub transfer: TransferReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub program: String,
    pub plan: String,
    pub optimized: bool,
    pub partitions: u64,
    pub seed: u64,
    pub result_size: u64,
    pub result_digest: String,
    pub records_shuffled: u64,
    pub fixpoints: Vec<FixpointEntry>,
}

impl RunReport {
    pub fn new(program: &str, plan: &str, optimized: bool, partitions: usize, seed: u64, out: &RunOutcome) -> Self {
        RunReport {
            program: program.to_string(),
            plan: plan.to_string(),
            optimized,
            partitions: partitions as u64,
            seed,
            result_size: result_size(&out.result),
            result_digest: digest(&out.result),
            records_shuffled: out.records_shuffled(),
            fixpoints: out
                .reports
                .iter()
                .map(|r| FixpointEntry {
                    site: r.site,
                    transfer: r.report.clone(),
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("reports serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRun {
    pub label: String,
    pub plan: String,
    pub optimized: bool,
    /// `ok`, or the error that stopped the run.
    pub status: String,
    pub result_size: u64,
    pub result_digest: String,
    pub iterations: u64,
    pub records_shuffled: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub program: String,
    pub n: u64,
    pub p: f64,
    pub seed: u64,
    pub partitions: u64,
    pub runs: Vec<BenchRun>,
}

impl BenchReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("reports serialize")
    }

    pub fn run(&self, label: &str) -> Option<&BenchRun> {
        self.runs.iter().find(|r| r.label == label)
    }
}
