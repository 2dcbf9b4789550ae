//! Runs a TOML experiment config through the harness, then summarizes and
//! plots recovery sweeps.
//!
//! Run with `cargo run --release --example run_config -- configs/recovery_sweep.toml`.
//! The output directory can be redirected with `ONEBIT_OUTPUT_DIR`.

use dithered_onebit::harness::{emit_plots, run_experiment, summarize, ExperimentConfig, ExperimentKind, PlotKind, RunOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/recovery_sweep.toml").to_string());
    let config = ExperimentConfig::load(&path)?;
    let out = run_experiment(&config, &RunOptions::from_env()?)?;
    for file in &out.results {
        println!("wrote {}", file.display());
    }
    if config.kind == ExperimentKind::RecoverySweep {
        let table = summarize(&out.results[0], &["law".into(), "m".into()], None)?;
        for row in &table.rows {
            println!("{:<14} median {:.4}  success {:.2}", row.keys.join(" m="), row.median, row.success_rate);
        }
        let summary = out.dir.join("summary.csv");
        table.write_csv(&summary)?;
        for file in emit_plots(&table, PlotKind::ErrorVsM, &out.dir)? {
            println!("wrote {}", file.display());
        }
    }
    Ok(())
}
