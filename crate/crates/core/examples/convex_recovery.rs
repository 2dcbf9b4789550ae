//! Recovery by the convex program over `√s B₁ⁿ ∩ B₂ⁿ`, whose maximizer is the
//! projection of the scaled backprojection `(λ/m) Aᵀq`.
//!
//! Run with `cargo run --release --example convex_recovery`.

use dithered_onebit::ensemble::{default_lambda, sample_dither, sample_matrix};
use dithered_onebit::linalg::dist2;
use dithered_onebit::quantize::{corrupt_bits, one_bit_measure};
use dithered_onebit::recovery::{backprojection, convex_objective, convex_recover};
use dithered_onebit::signal::sample_signal;
use dithered_onebit::{CorruptionStrategy, MeasurementEnsemble, RowLaw, SeedPlan, SignalSetDescriptor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, s) = (64, 3);
    let descriptor = SignalSetDescriptor::sparse_ball(s, n, 1.0)?;
    let lambda = default_lambda(1.0, 0.0, 0.2);
    println!("{:>6} {:>6} {:>10} {:>10}", "m", "β", "‖x#-x‖", "φ(x#)");
    for m in [500, 2000, 8000, 32000] {
        for beta in [0.0, 0.05] {
            let seed = SeedPlan::new(m as u64);
            let x = sample_signal(&descriptor, &seed, 0)?;
            let a = sample_matrix(&MeasurementEnsemble::new(RowLaw::Gaussian, n, m, lambda)?, &seed, 0)?;
            let dither = sample_dither(m, lambda, &seed, 0)?;
            let obs = one_bit_measure(&a, &x, &dither, &vec![0.0; m])?;
            let obs = corrupt_bits(&obs, beta, CorruptionStrategy::AdversarialLargestMargin, &seed, 0)?;
            let result = convex_recover(&a, &obs.q, lambda, &descriptor)?;
            let direct = convex_objective(&a, &obs.q, lambda, &result.x_hat)?;
            assert!((result.objective - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            println!("{m:>6} {beta:>6} {:>10.4} {:>10.4}", dist2(&result.x_hat, &x), result.objective);
        }
    }
    let seed = SeedPlan::new(1);
    let a = sample_matrix(&MeasurementEnsemble::new(RowLaw::Gaussian, 4, 4, 1.0)?, &seed, 0)?;
    println!("\nbackprojection of q = (+,+,-,-): {:.3?}", backprojection(&a, &[1, 1, -1, -1], 1.0)?);
    Ok(())
}
