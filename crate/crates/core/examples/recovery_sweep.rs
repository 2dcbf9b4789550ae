//! Median recovery error of the Hamming local search as `m` grows.
//!
//! Run with `cargo run --release --example recovery_sweep -- [trials] [law]`,
//! where `law` is `gaussian` (default) or `student_t`.

use std::time::Instant;

use dithered_onebit::harness::{recovery_sweep, summarize_rows, ExperimentConfig, ExperimentKind};
use dithered_onebit::{RowLaw, SignalSetDescriptor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let law = match args.next().as_deref() {
        Some("student_t") => RowLaw::StudentT { df: 3.0 },
        _ => RowLaw::Gaussian,
    };

    let mut config = ExperimentConfig::new(ExperimentKind::RecoverySweep);
    config.seed = 7;
    config.trials = trials;
    config.signal = Some(SignalSetDescriptor::sparse_ball(2, 32, 1.0)?);
    config.grid.laws = vec![law];
    config.grid.m = vec![100, 200, 400, 800, 1600, 3200];

    let start = Instant::now();
    let rows = recovery_sweep(&config)?;
    let table = summarize_rows(&rows, &["m".to_string()], None)?;
    println!("{:>6} {:>8} {:>8} {:>8} {:>8}", "m", "median", "q1", "q3", "success");
    for r in &table.rows {
        println!(
            "{:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.2}",
            r.keys[0], r.median, r.q1, r.q3, r.success_rate
        );
    }
    println!("{} trials in {:.1?}", rows.len(), start.elapsed());
    Ok(())
}
