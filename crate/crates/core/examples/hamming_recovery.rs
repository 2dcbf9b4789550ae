//! Recovery by Hamming-distance minimization: exactly over a net in small
//! dimension, and by local search for sparse vectors in larger dimension.
//!
//! Run with `cargo run --release --example hamming_recovery`.

use dithered_onebit::ensemble::{default_lambda, sample_dither, sample_matrix, sample_noise};
use dithered_onebit::linalg::dist2;
use dithered_onebit::quantize::{corrupt_bits, one_bit_measure};
use dithered_onebit::recovery::{build_net, hamming_objective, hamming_recover_local, hamming_recover_net};
use dithered_onebit::signal::sample_signal;
use dithered_onebit::{CorruptionStrategy, MeasurementEnsemble, NoiseModel, RowLaw, SeedPlan, SignalSetDescriptor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = SeedPlan::new(17);

    // Exact minimization over a net of the 1-sparse ball in dimension 6.
    let small = SignalSetDescriptor::sparse_ball(1, 6, 1.0)?;
    let net = build_net(&small, 0.05, 10_000, &seed)?;
    println!("net: {} points, certified radius {:.4}", net.len(), net.radius_empirical);
    let lambda = default_lambda(1.0, 0.0, 0.2);
    let m = 400;
    let x = sample_signal(&small, &seed, 0)?;
    let a = sample_matrix(&MeasurementEnsemble::new(RowLaw::Gaussian, 6, m, lambda)?, &seed, 0)?;
    let dither = sample_dither(m, lambda, &seed, 0)?;
    let obs = one_bit_measure(&a, &x, &dither, &vec![0.0; m])?;
    let result = hamming_recover_net(&a, &dither, &obs.q, &net)?;
    println!("net search:   error {:.4}, objective {}", dist2(&result.x_hat, &x), result.objective);

    // Local search for 2-sparse vectors in dimension 32 with noise and flips.
    let sparse = SignalSetDescriptor::sparse_ball(2, 32, 1.0)?;
    let noise_model = NoiseModel::Gaussian { sigma: 0.05 };
    let lambda = default_lambda(1.0, 0.05, 0.2);
    let m = 1600;
    let x = sample_signal(&sparse, &seed, 1)?;
    let a = sample_matrix(&MeasurementEnsemble::new(RowLaw::Gaussian, 32, m, lambda)?, &seed, 1)?;
    let dither = sample_dither(m, lambda, &seed, 1)?;
    let noise = sample_noise(&noise_model, m, &seed, 1)?;
    let obs = one_bit_measure(&a, &x, &dither, &noise)?;
    let obs = corrupt_bits(&obs, 0.05, CorruptionStrategy::AdversarialLargestMargin, &seed, 1)?;
    let result = hamming_recover_local(&a, &dither, &obs.q, &sparse, 4, 30, &seed)?;
    println!(
        "local search: error {:.4}, objective {} (true signal scores {})",
        dist2(&result.x_hat, &x),
        result.objective,
        hamming_objective(&a, &dither, &obs.q, &x)?
    );
    Ok(())
}
