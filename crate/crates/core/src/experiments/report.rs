use std::fmt::Write as _;

use super::matrix::{MatrixCell, SummaryRow};
use super::runner::ExperimentReport;
use crate::error::{Error, Result};

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

/// `mode,seed,accuracy,domain_confusion,paper_reference`, one row per cell.
/// Failed cells leave the two measured columns empty.
pub fn report_csv(cells: &[MatrixCell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Validation(format!("csv: {e}"));
    w.write_record(["mode", "seed", "accuracy", "domain_confusion", "paper_reference"])
        .map_err(err)?;
    for cell in cells {
        let reference = cell
            .mode
            .paper_reference()
            .map_or(String::new(), |r| format!("{:.4}", r.percent / 100.0));
        let (acc, conf) = match &cell.outcome {
            Ok(r) => (fixed(r.target_test_accuracy), fixed(r.domain_confusion)),
            Err(_) => (String::new(), String::new()),
        };
        w.write_record([cell.mode.as_str(), &cell.seed.to_string(), &acc, &conf, &reference])
            .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Validation(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Aligned text table in the layout of the published comparison.
pub fn format_table(summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<22} {:<12} {:>9} {:>8} {:>10} {:>6} {:>9}",
        "Model", "Training set", "Acc (%)", "Std", "Confusion", "Runs", "Paper (%)"
    );
    let _ = writeln!(out, "{}", "-".repeat(82));
    for row in summary {
        let paper = row
            .mode
            .paper_reference()
            .map_or("-".to_string(), |r| format!("{:.2}", r.percent));
        let runs = if row.failures > 0 {
            format!("{}/{}", row.runs, row.runs + row.failures)
        } else {
            row.runs.to_string()
        };
        let (acc, std, conf) = if row.runs == 0 {
            ("-".to_string(), "-".to_string(), "-".to_string())
        } else {
            (
                format!("{:.2}", 100.0 * row.mean_accuracy),
                format!("{:.2}", 100.0 * row.std_accuracy),
                format!("{:.3}", row.mean_domain_confusion),
            )
        };
        let _ = writeln!(
            out,
            "{:<22} {:<12} {:>9} {:>8} {:>10} {:>6} {:>9}",
            row.mode.label(),
            row.mode.formula(),
            acc,
            std,
            conf,
            runs,
            paper
        );
    }
    out
}

/// One JSON object per training step.
pub fn loss_log_lines(report: &ExperimentReport) -> String {
    let mut out = String::new();
    for (step, b) in report.loss_history.iter().enumerate() {
        let line = serde_json::json!({
            "mode": report.mode.as_str(),
            "seed": report.seed,
            "step": step,
            "label_loss": b.label_loss,
            "domain_loss": b.domain_loss,
            "combined_fc_objective": b.combined_fc_objective,
            "lambda": b.lambda_used,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}
