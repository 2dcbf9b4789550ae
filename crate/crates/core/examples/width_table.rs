//! Gaussian and empirical mean widths of sparse and ℓ1∩ℓ2 balls.
//!
//! Run with `cargo run --release --example width_table`.

use dithered_onebit::complexity::{covering_bound, empirical_width, gaussian_mean_width};
use dithered_onebit::harness::{describe, sparse_width_reference};
use dithered_onebit::signal::SignalSet;
use dithered_onebit::{RowLaw, SeedPlan, SignalSetDescriptor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = SeedPlan::new(9);
    let sets = [
        SignalSetDescriptor::sparse_ball(1, 16, 1.0)?,
        SignalSetDescriptor::sparse_ball(2, 64, 1.0)?,
        SignalSetDescriptor::sparse_ball(4, 256, 1.0)?,
        SignalSetDescriptor::l1l2_ball(4.0, 256, 1.0)?,
    ];
    println!(
        "{:<28} {:>9} {:>9} {:>12} {:>13}",
        "set", "ℓ*(T)", "ref", "E(T), t(3)", "log N(T,0.1)"
    );
    for d in &sets {
        let w = gaussian_mean_width(d, 4000, &seed)?;
        let e = empirical_width(d, RowLaw::StudentT { df: 3.0 }, 400, 500, &seed)?;
        let reference = match d.set {
            SignalSet::SparseBall { s, n } => format!("{:.3}", sparse_width_reference(s, n)),
            _ => "-".into(),
        };
        println!(
            "{:<28} {:>9.3} {:>9} {:>12.3} {:>13.1}",
            describe(d),
            w.value,
            reference,
            e.value,
            covering_bound(d, 0.1)?
        );
    }
    Ok(())
}
