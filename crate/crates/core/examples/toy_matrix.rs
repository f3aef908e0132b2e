//! Runs the full mode matrix on the default toy and prints the table.
//!
//! cargo run --release -p gradrev --example toy_matrix [seeds]

use gradrev::adversarial::AdversarialConfig;
use gradrev::datasets::{gen_two_domain_toy, ToyShiftConfig};
use gradrev::experiments::{default_threads, format_table, run_matrix, ExperimentMode, NetConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u64 = std::env::args().nth(1).map_or(Ok(5), |s| s.parse())?;
    let seeds: Vec<u64> = (1..=n).collect();
    let toy = ToyShiftConfig::default();
    let bundle = gen_two_domain_toy(&toy)?;
    let start = std::time::Instant::now();
    let result = run_matrix(
        &bundle,
        &ExperimentMode::ALL,
        &NetConfig::default(),
        &AdversarialConfig::default(),
        &seeds,
        default_threads(),
    )?;
    print!("{}", format_table(&result.summary));
    println!("{:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
