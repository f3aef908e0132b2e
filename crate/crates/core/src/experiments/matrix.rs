use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use super::mode::ExperimentMode;
use super::runner::{run_experiment, ExperimentReport, NetConfig};
use crate::adversarial::AdversarialConfig;
use crate::datasets::SplitBundle;
use crate::error::{Error, Result};

/// Environment variable capping matrix worker threads.
pub const THREADS_ENV: &str = "GRADREV_THREADS";

/// One (mode, seed) run; failures are kept as their message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixCell {
    pub mode: ExperimentMode,
    pub seed: u64,
    pub outcome: std::result::Result<ExperimentReport, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub mode: ExperimentMode,
    /// Successful runs.
    pub runs: usize,
    pub failures: usize,
    pub mean_accuracy: f64,
    /// Sample standard deviation (0 for a single run).
    pub std_accuracy: f64,
    pub mean_domain_confusion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixResult {
    /// Mode-major in table order, seeds in the given order.
    pub cells: Vec<MatrixCell>,
    pub summary: Vec<SummaryRow>,
}

impl MatrixResult {
    pub fn reports(&self) -> impl Iterator<Item = &ExperimentReport> {
        self.cells.iter().filter_map(|c| c.outcome.as_ref().ok())
    }

    pub fn summary_for(&self, mode: ExperimentMode) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.mode == mode)
    }
}

/// Worker count from `GRADREV_THREADS`, else the available parallelism.
pub fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every (mode, seed) cell on up to `threads` workers. Cells are
/// independent and each is single-threaded, so the result does not depend
/// on the thread count.
pub fn run_matrix(
    bundle: &SplitBundle,
    modes: &[ExperimentMode],
    net: &NetConfig,
    adv: &AdversarialConfig,
    seeds: &[u64],
    threads: usize,
) -> Result<MatrixResult> {
    if seeds.is_empty() {
        return Err(Error::Configuration("matrix needs at least one seed".into()));
    }
    let mut ordered: Vec<ExperimentMode> = modes.to_vec();
    ordered.sort();
    ordered.dedup();
    let jobs: Vec<(ExperimentMode, u64)> = ordered
        .iter()
        .flat_map(|&m| seeds.iter().map(move |&s| (m, s)))
        .collect();
    let slots: Vec<Mutex<Option<MatrixCell>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = threads.clamp(1, jobs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(mode, seed)) = jobs.get(i) else { break };
                let outcome = run_experiment(mode, bundle, net, adv, seed).map_err(|e| e.to_string());
                *slots[i].lock().expect("cell lock") = Some(MatrixCell { mode, seed, outcome });
            });
        }
    });
    let cells: Vec<MatrixCell> = slots
        .into_iter()
        .map(|s| s.into_inner().expect("cell lock").expect("every job ran"))
        .collect();

    let summary = ordered
        .iter()
        .map(|&mode| {
            let members: Vec<&MatrixCell> = cells.iter().filter(|c| c.mode == mode).collect();
            let ok: Vec<&ExperimentReport> = members.iter().filter_map(|c| c.outcome.as_ref().ok()).collect();
            let acc: Vec<f64> = ok.iter().map(|r| r.target_test_accuracy).collect();
            let conf: Vec<f64> = ok.iter().map(|r| r.domain_confusion).collect();
            let (mean_accuracy, std_accuracy) = mean_std(&acc);
            SummaryRow {
                mode,
                runs: ok.len(),
                failures: members.len() - ok.len(),
                mean_accuracy,
                std_accuracy,
                mean_domain_confusion: mean_std(&conf).0,
            }
        })
        .collect();
    Ok(MatrixResult { cells, summary })
}
