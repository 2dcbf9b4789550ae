//! The one-bit measurement pipeline: `q = sign(Ax + ν + τ)` followed by
//! post-quantization bit corruption.

use std::io::{Read, Write};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, Matrix};
use crate::seed::{SeedPlan, Stream};

/// A single quantized bit, stored as `±1`.
pub type Sign = i8;

/// `sign(v)` with the convention `sign(0) = +1`.
#[inline]
pub fn sign(v: f64) -> Sign {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedObservation {
    pub q: Vec<Sign>,
    /// Pre-sign values `Ax + ν + τ`.
    pub analog: Vec<f64>,
    pub corruption_mask: Vec<bool>,
    pub beta_actual: f64,
}

impl QuantizedObservation {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn flipped(&self) -> usize {
        self.corruption_mask.iter().filter(|b| **b).count()
    }
}

/// Sign pattern of `Az + τ` (no noise).
pub fn sign_pattern(a: &Matrix, z: &[f64], dither: &[f64]) -> Result<Vec<Sign>> {
    check_dim(a.cols(), z.len())?;
    check_dim(a.rows(), dither.len())?;
    Ok(a.iter_rows().zip(dither).map(|(row, t)| sign(dot(row, z) + t)).collect())
}

/// Uncorrupted measurement `q = sign(Ax + noise + dither)`.
pub fn one_bit_measure(a: &Matrix, x: &[f64], dither: &[f64], noise: &[f64]) -> Result<QuantizedObservation> {
    check_dim(a.cols(), x.len())?;
    check_dim(a.rows(), dither.len())?;
    check_dim(a.rows(), noise.len())?;
    let analog: Vec<f64> = a
        .iter_rows()
        .zip(dither.iter().zip(noise))
        .map(|(row, (t, nu))| dot(row, x) + nu + t)
        .collect();
    let q = analog.iter().map(|v| sign(*v)).collect();
    Ok(QuantizedObservation {
        q,
        corruption_mask: vec![false; analog.len()],
        analog,
        beta_actual: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionStrategy {
    RandomFlip,
    /// Flips the most confident bits (largest `|analog|`).
    #[default]
    AdversarialLargestMargin,
    AdversarialSmallestMargin,
}

impl CorruptionStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            CorruptionStrategy::RandomFlip => "random_flip",
            CorruptionStrategy::AdversarialLargestMargin => "adversarial_largest_margin",
            CorruptionStrategy::AdversarialSmallestMargin => "adversarial_smallest_margin",
        }
    }
}

/// Flips exactly `floor(beta·m)` bits of `obs`.
pub fn corrupt_bits(
    obs: &QuantizedObservation,
    beta: f64,
    strategy: CorruptionStrategy,
    seed: &SeedPlan,
    trial: u64,
) -> Result<QuantizedObservation> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param("beta", format!("must lie in [0, 1], got {beta}")));
    }
    let m = obs.len();
    let budget = ((beta * m as f64).floor() as usize).min(m);
    let chosen: Vec<usize> = match strategy {
        CorruptionStrategy::RandomFlip => {
            let mut rng = seed.rng(Stream::Corruption, trial);
            index::sample(&mut rng, m, budget).into_vec()
        }
        CorruptionStrategy::AdversarialLargestMargin | CorruptionStrategy::AdversarialSmallestMargin => {
            let mut order: Vec<usize> = (0..m).collect();
            let largest = strategy == CorruptionStrategy::AdversarialLargestMargin;
            order.sort_by(|&i, &j| {
                let (a, b) = (obs.analog[i].abs(), obs.analog[j].abs());
                let o = if largest { b.total_cmp(&a) } else { a.total_cmp(&b) };
                o.then(i.cmp(&j))
            });
            order.truncate(budget);
            order
        }
    };
    let mut out = obs.clone();
    for i in chosen {
        out.q[i] = -out.q[i];
        out.corruption_mask[i] = !out.corruption_mask[i];
    }
    out.beta_actual = if m == 0 { 0.0 } else { out.flipped() as f64 / m as f64 };
    Ok(out)
}

/// Hamming distance between two sign patterns: `(count, count / m)`.
pub fn sign_pattern_distance(q1: &[Sign], q2: &[Sign]) -> Result<(usize, f64)> {
    check_dim(q1.len(), q2.len())?;
    let count = q1.iter().zip(q2).filter(|(a, b)| a != b).count();
    let fraction = if q1.is_empty() { 0.0 } else { count as f64 / q1.len() as f64 };
    Ok((count, fraction))
}

/// `E sign(z + τ)` for `τ ~ U[-λ, λ]`: `z/λ` inside the dither range and
/// `±1` outside it.
pub fn quantizer_mean(z: f64, lambda: f64) -> f64 {
    (z / lambda).clamp(-1.0, 1.0)
}

/// Monte Carlo mean of `sign(z + τ)` over `n` dithers, with its standard error.
pub fn empirical_quantizer_mean(z: f64, lambda: f64, n: usize, seed: &SeedPlan, trial: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    let dither = crate::ensemble::sample_dither(n, lambda, seed, trial)?;
    let signs: Vec<f64> = dither.iter().map(|t| f64::from(sign(z + t))).collect();
    Ok(crate::stats::mean_and_se(&signs))
}

/// Writes a sign pattern as a little-endian `u64` length followed by packed
/// bits (bit set means `+1`, least significant bit is index 0).
pub fn write_packed<W: Write>(mut w: W, q: &[Sign]) -> std::io::Result<()> {
    w.write_all(&(q.len() as u64).to_le_bytes())?;
    let mut bytes = vec![0u8; q.len().div_ceil(8)];
    for (i, s) in q.iter().enumerate() {
        if *s > 0 {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    w.write_all(&bytes)
}

pub fn read_packed<R: Read>(mut r: R) -> std::io::Result<Vec<Sign>> {
    let mut header = [0u8; 8];
    r.read_exact(&mut header)?;
    let m = u64::from_le_bytes(header) as usize;
    let mut bytes = vec![0u8; m.div_ceil(8)];
    r.read_exact(&mut bytes)?;
    Ok((0..m)
        .map(|i| if bytes[i / 8] >> (i % 8) & 1 == 1 { 1 } else { -1 })
        .collect())
}
