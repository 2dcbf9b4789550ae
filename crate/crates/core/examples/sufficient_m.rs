//! Sample sizes suggested by each theorem for 2-sparse signals in dimension
//! 64, across accuracy targets. All constants are set to 1.
//!
//! Run with `cargo run --release --example sufficient_m`.

use dithered_onebit::complexity::{sufficient_m, Theorem, TheoremConstants, TheoremParams};
use dithered_onebit::SignalSetDescriptor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let constants = TheoremConstants::default();
    let theorems = [
        Theorem::TessSubgaussian,
        Theorem::TessHeavyTailed,
        Theorem::RecoverSubgaussian,
        Theorem::RecoverHeavyTailed,
        Theorem::Convex,
    ];
    print!("{:>5}", "ρ");
    for t in &theorems {
        print!(" {:>22}", format!("{t:?}"));
    }
    println!();
    for rho in [0.5, 0.3, 0.2, 0.1] {
        let mut params = TheoremParams::new(1.0, rho);
        params.descriptor = Some(SignalSetDescriptor::sparse_ball(2, 64, 1.0)?);
        params.widths.n_mc = 500;
        print!("{rho:>5}");
        for t in theorems {
            let out = sufficient_m(t, &params, &constants)?;
            print!(" {:>22}", out.m);
        }
        println!();
    }
    Ok(())
}
