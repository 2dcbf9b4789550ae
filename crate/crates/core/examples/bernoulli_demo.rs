//! Two distinct points that no undithered ±1 hyperplane separates, and how a
//! uniform dither fixes it.
//!
//! Run with `cargo run --example bernoulli_demo`.

use dithered_onebit::harness::{bernoulli_rows, ExperimentConfig, ExperimentKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = ExperimentConfig::new(ExperimentKind::BernoulliFailureDemo);
    config.lambda = Some(2.0);
    config.grid.m = vec![100, 500, 2000];
    config.trials = 3;
    config.seed = 5;

    println!("{:<11} {:>5} {:>4} {:>5} {:>8} {:>9}", "setting", "m", "λ", "trial", "‖x-y‖", "d(x,y)");
    for r in bernoulli_rows(&config)? {
        println!(
            "{:<11} {:>5} {:>4} {:>5} {:>8.4} {:>9.4}",
            r.setting, r.m, r.lambda, r.trial, r.distance, r.hamming_fraction
        );
    }
    Ok(())
}
