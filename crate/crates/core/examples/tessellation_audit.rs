//! How well the dithered hyperplane tessellation encodes distances between
//! sparse vectors, with large-margin counts and a metric chain.
//!
//! Run with `cargo run --release --example tessellation_audit`.

use dithered_onebit::ensemble::{sample_dither, sample_matrix};
use dithered_onebit::harness::{audit_cell, ExperimentConfig, ExperimentKind};
use dithered_onebit::signal::sample_signal;
use dithered_onebit::tessellation::{margin_separation_set, metric_chain, separation_probability};
use dithered_onebit::{MeasurementEnsemble, RowLaw, SeedPlan, SignalSetDescriptor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let descriptor = SignalSetDescriptor::sparse_ball(2, 64, 1.0)?;

    let mut config = ExperimentConfig::new(ExperimentKind::TessellationAudit);
    config.signal = Some(descriptor.clone());
    config.lambda = Some(3.0);
    config.seed = 3;
    let report = audit_cell(&config, RowLaw::Gaussian, 5000, 0)?;
    let summary = report.summary.expect("all pairs are at distance >= rho");
    println!(
        "{} pairs: d(x,y) / (‖x-y‖/λ) in [{:.3}, {:.3}], Spearman {:.3}",
        summary.eligible, summary.min_ratio, summary.max_ratio, summary.rank_correlation
    );
    let mut out = Vec::new();
    report.write_csv(&mut out)?;
    for line in String::from_utf8(out)?.lines().take(4) {
        println!("  {line}");
    }

    let seed = SeedPlan::new(8);
    let x = sample_signal(&descriptor, &seed, 0)?;
    let y = sample_signal(&descriptor, &seed, 1)?;
    let ensemble = MeasurementEnsemble::new(RowLaw::Gaussian, 64, 2000, 3.0)?;
    let a = sample_matrix(&ensemble, &seed, 0)?;
    let dither = sample_dither(2000, 3.0, &seed, 0)?;
    for theta in [0.0, 0.05, 0.1, 0.2] {
        let set = margin_separation_set(&a, &dither, &x, &y, theta)?;
        println!("θ = {theta:<4}  {} of 2000 hyperplanes separate with margin", set.len());
    }
    let (p, se) = separation_probability(&ensemble, &x, &y, 20_000, &seed)?;
    println!("P(x, y separated) = {p:.4} ± {se:.4}");

    let chain = metric_chain(&x, &y, 0.3, &descriptor)?;
    println!(
        "chain of {} points, step {:.3}, γ = {:.3}, valid: {}",
        chain.points.len(),
        chain.step,
        chain.gamma,
        chain.verify(&x, &y, 0.3, 1e-12)
    );
    Ok(())
}
