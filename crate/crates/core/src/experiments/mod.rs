//! The recognition-rate comparison: one trained model per mode and seed.

mod matrix;
mod mode;
mod report;
mod runner;

pub use matrix::{default_threads, mean_std, run_matrix, MatrixCell, MatrixResult, SummaryRow, THREADS_ENV};
pub use mode::{ExperimentMode, PaperReference};
pub use report::{format_table, loss_log_lines, report_csv};
pub use runner::{
    confusion_diagnostic, evaluate, run_experiment, samples_matrix, train_experiment, ExperimentReport, NetConfig,
};
