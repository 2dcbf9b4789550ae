//! Dithered one-bit measurements, adversarial bit flips and packed storage.
//!
//! Run with `cargo run --example quantize`.

use dithered_onebit::ensemble::{sample_dither, sample_matrix, sample_noise};
use dithered_onebit::quantize::{
    corrupt_bits, empirical_quantizer_mean, one_bit_measure, quantizer_mean, read_packed, sign_pattern_distance,
    write_packed,
};
use dithered_onebit::signal::sample_signal;
use dithered_onebit::{CorruptionStrategy, MeasurementEnsemble, NoiseModel, RowLaw, SeedPlan, SignalSetDescriptor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = SeedPlan::new(2024);
    let (n, m, lambda) = (16, 64, 2.5);

    let descriptor = SignalSetDescriptor::sparse_ball(3, n, 1.0)?;
    let x = sample_signal(&descriptor, &seed, 0)?;
    let ensemble = MeasurementEnsemble::new(RowLaw::Gaussian, n, m, lambda)?;
    let a = sample_matrix(&ensemble, &seed, 0)?;
    let dither = sample_dither(m, lambda, &seed, 0)?;
    let noise = sample_noise(&NoiseModel::Gaussian { sigma: 0.05 }, m, &seed, 0)?;

    let clean = one_bit_measure(&a, &x, &dither, &noise)?;
    let corrupted = corrupt_bits(&clean, 0.1, CorruptionStrategy::AdversarialLargestMargin, &seed, 0)?;
    let (flips, fraction) = sign_pattern_distance(&clean.q, &corrupted.q)?;
    let bits: String = corrupted.q.iter().map(|s| if *s > 0 { '+' } else { '-' }).collect();
    println!("q_corr = {bits}");
    println!("{flips} bits flipped ({fraction:.3} of m = {m})");

    let mut packed = Vec::new();
    write_packed(&mut packed, &corrupted.q)?;
    assert_eq!(read_packed(packed.as_slice())?, corrupted.q);
    println!("packed into {} bytes", packed.len());

    println!("\n   z   E sign(z+τ)   Monte Carlo (λ = 1, N = 10⁵)");
    for z in [-1.5, -0.5, 0.0, 0.25, 1.5] {
        let (mean, se) = empirical_quantizer_mean(z, 1.0, 100_000, &seed, 1)?;
        println!("{z:>5}   {:>11.4}   {mean:.4} ± {se:.4}", quantizer_mean(z, 1.0));
    }
    Ok(())
}
