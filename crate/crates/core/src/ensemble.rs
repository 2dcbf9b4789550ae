//! Measurement ensembles, dithers and pre-quantization noise.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed::{SeedPlan, Stream};

/// Coordinate law of a measurement row. Every law is symmetric, i.i.d. across
/// coordinates and scaled to unit variance, so rows are isotropic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RowLaw {
    Gaussian,
    Rademacher,
    /// Student-t with `df > 2`, rescaled by `√((df-2)/df)`.
    StudentT { df: f64 },
    /// `±E^alpha` with `E ~ Exp(1)` truncated at `E <= 4·alpha·max(ln n, 1)`, normalized to
    /// unit variance. The `L^p` norms grow like `p^alpha` up to `p ≈ ln n`.
    CoordHeavy { alpha: f64 },
}

impl RowLaw {
    pub fn name(&self) -> String {
        match self {
            RowLaw::Gaussian => "gaussian".into(),
            RowLaw::Rademacher => "rademacher".into(),
            RowLaw::StudentT { df } => format!("student_t({df})"),
            RowLaw::CoordHeavy { alpha } => format!("coord_heavy({alpha})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RowLaw::StudentT { df } if !(df > 2.0) => Err(Error::InvalidEnsemble(format!(
                "Student-t rows need df > 2 for a finite variance, got {df}"
            ))),
            RowLaw::CoordHeavy { alpha } if !(alpha > 0.0) || !alpha.is_finite() => Err(
                Error::InvalidEnsemble(format!("coord-heavy exponent must be positive, got {alpha}")),
            ),
            _ => Ok(()),
        }
    }

    /// Coordinate sampler for ambient dimension `n`.
    pub fn sampler(&self, n: usize) -> Result<CoordSampler> {
        self.validate()?;
        Ok(match *self {
            RowLaw::Gaussian => CoordSampler::Gaussian,
            RowLaw::Rademacher => CoordSampler::Rademacher,
            RowLaw::StudentT { df } => CoordSampler::StudentT {
                dist: StudentT::new(df).map_err(|e| Error::InvalidEnsemble(e.to_string()))?,
                scale: ((df - 2.0) / df).sqrt(),
            },
            RowLaw::CoordHeavy { alpha } => {
                let cap = 4.0 * alpha * (n as f64).ln().max(1.0);
                let second_moment = truncated_power_moment(2.0 * alpha, cap);
                CoordSampler::CoordHeavy {
                    alpha,
                    cap,
                    scale: second_moment.sqrt().recip(),
                }
            }
        })
    }
}

/// Per-coordinate sampler built from a [`RowLaw`].
#[derive(Debug, Clone, Copy)]
pub enum CoordSampler {
    Gaussian,
    Rademacher,
    StudentT { dist: StudentT<f64>, scale: f64 },
    CoordHeavy { alpha: f64, cap: f64, scale: f64 },
}

impl CoordSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            CoordSampler::Gaussian => rng.sample(StandardNormal),
            CoordSampler::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            CoordSampler::StudentT { dist, scale } => scale * dist.sample(rng),
            CoordSampler::CoordHeavy { alpha, cap, scale } => {
                let e = loop {
                    let e: f64 = rng.sample(Exp1);
                    if e <= *cap {
                        break e;
                    }
                };
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * scale * e.powf(*alpha)
            }
        }
    }
}

/// `E[E^k | E <= cap]` for `E ~ Exp(1)`, by composite Simpson quadrature.
fn truncated_power_moment(k: f64, cap: f64) -> f64 {
    let panels = 20_000;
    let h = cap / panels as f64;
    let f = |x: f64| if x == 0.0 { if k == 0.0 { 1.0 } else { 0.0 } } else { x.powf(k) * (-x).exp() };
    let mut acc = f(0.0) + f(cap);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    let integral = acc * h / 3.0;
    integral / (1.0 - (-cap).exp())
}

/// Distribution of the measurement matrix `A` (rows `X_1..X_m`) together with
/// the dither amplitude `λ` and the norm-equivalence constant `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEnsemble {
    pub row_law: RowLaw,
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    /// Subgaussian / `L¹-L²` equivalence constant. Metadata only.
    #[serde(default = "default_l")]
    pub l_const: f64,
}

fn default_l() -> f64 {
    1.0
}

impl MeasurementEnsemble {
    pub fn new(row_law: RowLaw, n: usize, m: usize, lambda: f64) -> Result<Self> {
        let e = Self {
            row_law,
            n,
            m,
            lambda,
            l_const: 1.0,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        self.row_law.validate()?;
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidEnsemble(format!(
                "dimensions must be positive, got m={}, n={}",
                self.m, self.n
            )));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidEnsemble(format!(
                "dither amplitude must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Draws the `m × n` measurement matrix for a trial.
pub fn sample_matrix(ensemble: &MeasurementEnsemble, seed: &SeedPlan, trial: u64) -> Result<Matrix> {
    ensemble.validate()?;
    sample_rows(ensemble.row_law, ensemble.m, ensemble.n, seed, Stream::Matrix, trial)
}

/// Draws `m` i.i.d. rows from `law` on an explicit stream.
pub fn sample_rows(law: RowLaw, m: usize, n: usize, seed: &SeedPlan, stream: Stream, trial: u64) -> Result<Matrix> {
    let sampler = law.sampler(n)?;
    let mut rng = seed.rng(stream, trial);
    let data = (0..m * n).map(|_| sampler.sample(&mut rng)).collect();
    Matrix::from_row_major(m, n, data)
}

/// Uniform dithers on `[-λ, λ]`.
pub fn sample_dither(m: usize, lambda: f64, seed: &SeedPlan, trial: u64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    let dist = Uniform::new_inclusive(-lambda, lambda).map_err(|e| Error::param("lambda", e.to_string()))?;
    let rng = seed.rng(Stream::Dither, trial);
    Ok(dist.sample_iter(rng).take(m).collect())
}

/// Law of the pre-quantization noise `ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    Gaussian { sigma: f64 },
    /// Student-t rescaled to standard deviation `sigma`.
    StudentT { df: f64, sigma: f64 },
    /// Deterministic offset `mu`, the adversarial component `|E ν|`.
    ConstantBias { mu: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { sigma } | NoiseModel::StudentT { sigma, .. } if !(sigma >= 0.0) => {
                Err(Error::param("sigma", format!("must be nonnegative, got {sigma}")))
            }
            NoiseModel::StudentT { df, .. } if !(df > 2.0) => {
                Err(Error::param("df", format!("Student-t noise needs df > 2, got {df}")))
            }
            NoiseModel::ConstantBias { mu } if !mu.is_finite() => Err(Error::param("mu", "must be finite")),
            _ => Ok(()),
        }
    }

    /// Standard deviation `σ`.
    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } | NoiseModel::StudentT { sigma, .. } => sigma,
            _ => 0.0,
        }
    }

    /// `‖ν‖_{L²} = √(σ² + (Eν)²)`.
    pub fn l2_norm(&self) -> f64 {
        match *self {
            NoiseModel::ConstantBias { mu } => mu.abs(),
            other => other.sigma(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            NoiseModel::None => "none".into(),
            NoiseModel::Gaussian { sigma } => format!("gaussian({sigma})"),
            NoiseModel::StudentT { df, sigma } => format!("student_t({df},{sigma})"),
            NoiseModel::ConstantBias { mu } => format!("bias({mu})"),
        }
    }
}

/// Draws the noise vector `ν` of length `m`.
pub fn sample_noise(model: &NoiseModel, m: usize, seed: &SeedPlan, trial: u64) -> Result<Vec<f64>> {
    model.validate()?;
    let mut rng = seed.rng(Stream::Noise, trial);
    Ok(match *model {
        NoiseModel::None => vec![0.0; m],
        NoiseModel::Gaussian { sigma } => (0..m).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect(),
        NoiseModel::StudentT { df, sigma } => {
            let dist = StudentT::new(df).map_err(|e| Error::param("df", e.to_string()))?;
            let scale = sigma * ((df - 2.0) / df).sqrt();
            (0..m).map(|_| scale * dist.sample(&mut rng)).collect()
        }
        NoiseModel::ConstantBias { mu } => vec![mu; m],
    })
}

/// Default dither amplitude `λ = 2(R + σ) + ρ`.
pub fn default_lambda(radius: f64, sigma: f64, rho: f64) -> f64 {
    2.0 * (radius + sigma) + rho
}
