//! Analytics of the random hyperplane tessellation `{H_{X_i, τ_i}}`:
//! separation counts, large-margin separation, separation probabilities,
//! metric chains and pairwise audits.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{MeasurementEnsemble, sample_rows};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist2, dot, norm2, Matrix};
use crate::quantize::sign;
use crate::seed::{SeedPlan, Stream};
use crate::signal::{membership, SignalSet, SignalSetDescriptor};
use crate::stats::{mean_and_se, spearman};

/// Margins used by audits when none are configured.
pub const DEFAULT_THETAS: [f64; 3] = [0.05, 0.1, 0.2];

fn check_inputs(a: &Matrix, dither: &[f64], x: &[f64], y: &[f64]) -> Result<()> {
    check_dim(a.rows(), dither.len())?;
    check_dim(a.cols(), x.len())?;
    check_dim(a.cols(), y.len())
}

/// Indices `i` with `sign(⟨X_i,x⟩+τ_i) ≠ sign(⟨X_i,y⟩+τ_i)`.
pub fn separating_indices(a: &Matrix, dither: &[f64], x: &[f64], y: &[f64]) -> Result<Vec<usize>> {
    check_inputs(a, dither, x, y)?;
    Ok(a.iter_rows()
        .zip(dither)
        .enumerate()
        .filter(|(_, (row, t))| sign(dot(row, x) + *t) != sign(dot(row, y) + *t))
        .map(|(i, _)| i)
        .collect())
}

/// Number of hyperplanes separating `x` and `y`; `m · d(x, y)`.
pub fn separation_count(a: &Matrix, dither: &[f64], x: &[f64], y: &[f64]) -> Result<usize> {
    separating_indices(a, dither, x, y).map(|v| v.len())
}

/// Indices of the hyperplanes that `θ`-well-separate two points.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginSeparationSet {
    pub indices: Vec<usize>,
    pub theta: f64,
}

impl MarginSeparationSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Hyperplanes separating `x` and `y` with both margins `>= θ‖x - y‖₂`.
pub fn margin_separation_set(a: &Matrix, dither: &[f64], x: &[f64], y: &[f64], theta: f64) -> Result<MarginSeparationSet> {
    let zeros = vec![0.0; a.rows()];
    noisy_margin_separation_set(a, dither, &zeros, x, y, theta)
}

/// Noisy variant: the noise `ν_i` enters only the `x`-side value
/// `⟨X_i,x⟩ + ν_i + τ_i`.
pub fn noisy_margin_separation_set(
    a: &Matrix,
    dither: &[f64],
    noise: &[f64],
    x: &[f64],
    y: &[f64],
    theta: f64,
) -> Result<MarginSeparationSet> {
    check_inputs(a, dither, x, y)?;
    check_dim(a.rows(), noise.len())?;
    if !(theta >= 0.0) {
        return Err(Error::param("theta", format!("must be nonnegative, got {theta}")));
    }
    let margin = theta * dist2(x, y);
    let indices = a
        .iter_rows()
        .zip(dither.iter().zip(noise))
        .enumerate()
        .filter(|(_, (row, (t, nu)))| {
            let vx = dot(row, x) + *nu + *t;
            let vy = dot(row, y) + *t;
            sign(vx) != sign(vy) && vx.abs() >= margin && vy.abs() >= margin
        })
        .map(|(i, _)| i)
        .collect();
    Ok(MarginSeparationSet { indices, theta })
}

/// `P_τ(H_{X,τ} separates x, y | X)` for `τ ~ U[-λ, λ]`, given
/// `z_x = ⟨X,x⟩` and `z_y = ⟨X,y⟩`: the length of
/// `[min(-z_x,-z_y), max(-z_x,-z_y)) ∩ [-λ, λ]` divided by `2λ`.
pub fn conditional_separation_probability(z_x: f64, z_y: f64, lambda: f64) -> f64 {
    let lo = (-z_x).min(-z_y).max(-lambda);
    let hi = (-z_x).max(-z_y).min(lambda);
    ((hi - lo).max(0.0)) / (2.0 * lambda)
}

/// Rao-Blackwellized Monte Carlo estimate of `P(H_{X,τ} separates x and y)`:
/// `X` is sampled, the dither is integrated exactly. Returns
/// `(estimate, standard error)`.
pub fn separation_probability(
    ensemble: &MeasurementEnsemble,
    x: &[f64],
    y: &[f64],
    n_mc: usize,
    seed: &SeedPlan,
) -> Result<(f64, f64)> {
    ensemble.validate()?;
    check_dim(ensemble.n, x.len())?;
    check_dim(ensemble.n, y.len())?;
    if n_mc == 0 {
        return Err(Error::param("n_mc", "must be at least 1"));
    }
    let rows = sample_rows(ensemble.row_law, n_mc, ensemble.n, seed, Stream::Custom(0x5e9), 0)?;
    let terms: Vec<f64> = rows
        .iter_rows()
        .map(|row| conditional_separation_probability(dot(row, x), dot(row, y), ensemble.lambda))
        .collect();
    Ok(mean_and_se(&terms))
}

/// A chain `x = z_0, z_1, …, z_ℓ, z_{ℓ+1} = y` with controlled step lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricChain {
    /// Interior points `z_1..z_ℓ`.
    pub points: Vec<Vec<f64>>,
    /// Common step length `‖z_i - z_{i+1}‖₂`.
    pub step: f64,
    /// Certified constant: `γ·r <= step <= r`.
    pub gamma: f64,
}

impl MetricChain {
    /// Checks `γr <= ‖z_i - z_{i+1}‖ <= r` for every step (only the upper
    /// bound when there are no interior points) and
    /// `Σ‖z_i - z_{i+1}‖ <= γ⁻¹ ‖x - y‖`, with relative slack `tol`.
    pub fn verify(&self, x: &[f64], y: &[f64], r: f64, tol: f64) -> bool {
        let mut nodes: Vec<&[f64]> = vec![x];
        nodes.extend(self.points.iter().map(Vec::as_slice));
        nodes.push(y);
        let steps: Vec<f64> = nodes.windows(2).map(|w| dist2(w[0], w[1])).collect();
        let total: f64 = steps.iter().sum();
        let upper = steps.iter().all(|s| *s <= r * (1.0 + tol));
        let lower = self.points.is_empty() || steps.iter().all(|s| *s >= self.gamma * r * (1.0 - tol));
        upper && lower && total <= dist2(x, y) / self.gamma * (1.0 + tol) + tol
    }
}

/// Straight-line chain from `x` to `y` with `ℓ + 1 = ⌈‖x-y‖/r⌉` equal steps.
///
/// Equal steps satisfy `r/2 <= step <= r` whenever `‖x - y‖ > r`, so
/// `γ = step / r >= 1/2` is returned with the chain. For a sparse ball the
/// chain lives in the `2s`-sparse ball of the same radius.
pub fn metric_chain(x: &[f64], y: &[f64], r: f64, descriptor: &SignalSetDescriptor) -> Result<MetricChain> {
    if !(r > 0.0) {
        return Err(Error::param("r", format!("must be positive, got {r}")));
    }
    check_dim(descriptor.dim(), x.len())?;
    check_dim(descriptor.dim(), y.len())?;
    let host = chain_host(descriptor)?;
    for p in [x, y] {
        if !membership(&host, p, 1e-9)? {
            return Err(Error::Precondition("chain endpoints must lie in the signal set".into()));
        }
    }
    let d = dist2(x, y);
    if d <= r {
        return Ok(MetricChain {
            points: Vec::new(),
            step: d,
            gamma: 1.0,
        });
    }
    let steps = (d / r).ceil() as usize;
    let step = d / steps as f64;
    let points = (1..steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            x.iter().zip(y).map(|(a, b)| a + t * (b - a)).collect()
        })
        .collect();
    Ok(MetricChain {
        points,
        step,
        gamma: step / r,
    })
}

/// The set the chain of `descriptor` lives in.
pub fn chain_host(descriptor: &SignalSetDescriptor) -> Result<SignalSetDescriptor> {
    match &descriptor.set {
        SignalSet::SparseBall { s, n } => SignalSetDescriptor::sparse_ball((2 * s).min(*n), *n, descriptor.radius),
        SignalSet::L1L2Ball { .. } => Ok(descriptor.clone()),
        SignalSet::FiniteSet { points } => {
            // Any subset is chain-convex in its convex hull; the Euclidean ball
            // of the same radius is a convenient superset.
            let n = points[0].len();
            SignalSetDescriptor::l1l2_ball(n as f64, n, descriptor.radius)
        }
    }
}

/// Stability of separation under perturbation.
///
/// Returns whether the hypotheses hold: `H_{X,τ}` `θ`-well-separates `v` and
/// `w`, `|⟨X, x - v⟩| <= θr′/3` and `|⟨X, y - w⟩| <= θr′/3`. Whenever it
/// returns `true` it has also checked that `H_{X,τ}` separates `x` and `y`.
#[allow(clippy::too_many_arguments)]
pub fn stability_predicate(
    row: &[f64],
    tau: f64,
    v: &[f64],
    w: &[f64],
    x: &[f64],
    y: &[f64],
    theta: f64,
    r_prime: f64,
) -> Result<bool> {
    let n = row.len();
    for p in [v, w, x, y] {
        check_dim(n, p.len())?;
    }
    let vw = dist2(v, w);
    if vw < r_prime {
        return Err(Error::Precondition(format!(
            "‖w - v‖ = {vw} is smaller than r′ = {r_prime}"
        )));
    }
    let (av, aw) = (dot(row, v) + tau, dot(row, w) + tau);
    let margin = theta * vw;
    let well_separated = sign(av) != sign(aw) && av.abs() >= margin && aw.abs() >= margin;
    let slack = theta * r_prime / 3.0;
    let xv: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - b).collect();
    let yw: Vec<f64> = y.iter().zip(w).map(|(a, b)| a - b).collect();
    let holds = well_separated && dot(row, &xv).abs() <= slack && dot(row, &yw).abs() <= slack;
    if holds {
        assert_ne!(
            sign(dot(row, x) + tau),
            sign(dot(row, y) + tau),
            "stability conclusion violated"
        );
    }
    Ok(holds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub pair_id: usize,
    pub distance: f64,
    pub hamming_fraction: f64,
    /// `|I_{x,y}(θ_k)|` for each configured `θ_k`.
    pub margin_counts: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    /// Pairs with distance at least `ρ`.
    pub eligible: usize,
    /// Extremes of `d(x,y) / (‖x-y‖₂/λ)` over eligible pairs.
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Spearman correlation of `d(x,y)` and `‖x-y‖₂` over eligible pairs.
    pub rank_correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TessellationReport {
    pub rho: f64,
    pub lambda: f64,
    pub thetas: Vec<f64>,
    pub pairs: Vec<PairStats>,
    /// `None` when no pair is at distance `>= ρ`.
    pub summary: Option<AuditSummary>,
}

impl TessellationReport {
    /// CSV with one row per pair and a trailing `summary` row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(w);
        let mut header = vec!["pair_id".to_string(), "distance".into(), "hamming_fraction".into()];
        header.extend((0..self.thetas.len()).map(|k| format!("margin_count_theta_{k}")));
        wtr.write_record(&header)?;
        for p in &self.pairs {
            let mut row = vec![p.pair_id.to_string(), p.distance.to_string(), p.hamming_fraction.to_string()];
            row.extend(p.margin_counts.iter().map(|c| c.to_string()));
            wtr.write_record(&row)?;
        }
        let thetas: Vec<String> = self.thetas.iter().map(|t| t.to_string()).collect();
        let mut footer = vec![
            "summary".to_string(),
            format!("rho={}", self.rho),
            format!("lambda={}", self.lambda),
            format!("thetas={}", thetas.join(";")),
        ];
        match &self.summary {
            Some(s) => footer.extend([
                format!("eligible={}", s.eligible),
                format!("min_ratio={}", s.min_ratio),
                format!("max_ratio={}", s.max_ratio),
                format!("spearman={}", s.rank_correlation),
            ]),
            None => footer.push("eligible=0".into()),
        }
        wtr.write_record(&footer)?;
        wtr.flush().map_err(|e| Error::io("<report>", e))?;
        Ok(())
    }
}

/// Audits a fixed tessellation on a list of pairs. `lambda` is the dither
/// amplitude used to normalize distances; with `lambda = 0` (no dither) the
/// ratio summary is omitted.
pub fn tessellation_audit(
    a: &Matrix,
    dither: &[f64],
    pairs: &[(Vec<f64>, Vec<f64>)],
    rho: f64,
    thetas: &[f64],
    lambda: f64,
) -> Result<TessellationReport> {
    let m = a.rows() as f64;
    let stats = pairs
        .par_iter()
        .enumerate()
        .map(|(pair_id, (x, y))| {
            let count = separation_count(a, dither, x, y)?;
            let margin_counts = thetas
                .iter()
                .map(|t| margin_separation_set(a, dither, x, y, *t).map(|s| s.len()))
                .collect::<Result<Vec<_>>>()?;
            Ok(PairStats {
                pair_id,
                distance: dist2(x, y),
                hamming_fraction: count as f64 / m,
                margin_counts,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let eligible: Vec<&PairStats> = stats.iter().filter(|p| p.distance >= rho && p.distance > 0.0).collect();
    let summary = (lambda > 0.0 && !eligible.is_empty()).then(|| {
        let ratios: Vec<f64> = eligible.iter().map(|p| p.hamming_fraction / (p.distance / lambda)).collect();
        let d: Vec<f64> = eligible.iter().map(|p| p.hamming_fraction).collect();
        let dist: Vec<f64> = eligible.iter().map(|p| p.distance).collect();
        AuditSummary {
            eligible: eligible.len(),
            min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
            max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            rank_correlation: spearman(&d, &dist),
        }
    });
    Ok(TessellationReport {
        rho,
        lambda,
        thetas: thetas.to_vec(),
        pairs: stats,
        summary,
    })
}

/// Fraction of hyperplanes separating `x` and `y`: `d(x, y)`.
pub fn hamming_fraction(a: &Matrix, dither: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(separation_count(a, dither, x, y)? as f64 / a.rows() as f64)
}

/// All `2^n` sign vectors of `{-1, 1}^n`, i.e. every homogeneous Bernoulli hyperplane.
pub fn all_sign_vectors(n: usize) -> Result<Matrix> {
    if n > 20 {
        return Err(Error::param("n", "enumeration limited to n <= 20"));
    }
    let rows: Vec<Vec<f64>> = (0..1usize << n)
        .map(|mask| (0..n).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }).collect())
        .collect();
    Matrix::from_rows(&rows)
}

/// The pair `x = e₁`, `y = (1, -1/2)/‖(1, -1/2)‖` in the plane: far apart, yet
/// no homogeneous Bernoulli hyperplane separates them.
pub fn bernoulli_blind_pair() -> (Vec<f64>, Vec<f64>) {
    let norm = norm2(&[1.0, -0.5]);
    (vec![1.0, 0.0], vec![1.0 / norm, -0.5 / norm])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_dither, sample_matrix, RowLaw};
    use crate::quantize::{one_bit_measure, sign_pattern_distance};
    use crate::signal::sample_signal;

    fn one_row() -> Matrix {
        Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn separation_examples() {
        let a = one_row();
        assert_eq!(separation_count(&a, &[0.0], &[0.3, 1.0], &[0.3, 1.0]).unwrap(), 0);
        assert_eq!(separation_count(&a, &[0.0], &[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 1);
        assert!(separation_count(&a, &[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn separation_matches_quantized_patterns() {
        let plan = SeedPlan::new(8);
        let e = MeasurementEnsemble::new(RowLaw::Gaussian, 5, 50, 1.0).unwrap();
        let a = sample_matrix(&e, &plan, 0).unwrap();
        let tau = sample_dither(50, 1.0, &plan, 0).unwrap();
        let d = SignalSetDescriptor::sparse_ball(2, 5, 1.0).unwrap();
        for t in 0..20 {
            let x = sample_signal(&d, &plan, 2 * t).unwrap();
            let y = sample_signal(&d, &plan, 2 * t + 1).unwrap();
            let qx = one_bit_measure(&a, &x, &tau, &[0.0; 50]).unwrap().q;
            let qy = one_bit_measure(&a, &y, &tau, &[0.0; 50]).unwrap().q;
            let (count, _) = sign_pattern_distance(&qx, &qy).unwrap();
            assert_eq!(separation_count(&a, &tau, &x, &y).unwrap(), count);
        }
    }

    #[test]
    fn margin_examples() {
        let a = one_row();
        let (x, y) = ([1.0, 0.0], [-1.0, 0.0]);
        assert_eq!(margin_separation_set(&a, &[0.0], &x, &y, 0.4).unwrap().indices, vec![0]);
        assert!(margin_separation_set(&a, &[0.0], &x, &y, 0.6).unwrap().is_empty());
        assert_eq!(
            margin_separation_set(&a, &[0.0], &x, &y, 0.0).unwrap().indices,
            separating_indices(&a, &[0.0], &x, &y).unwrap()
        );
        assert!(margin_separation_set(&a, &[0.0], &x, &y, -1.0).is_err());
    }

    #[test]
    fn noisy_margin_examples() {
        let a = one_row();
        let set = noisy_margin_separation_set(&a, &[0.0], &[0.5], &[0.2, 0.0], &[-1.0, 0.0], 0.3).unwrap();
        assert_eq!(set.indices, vec![0]);
        let set = noisy_margin_separation_set(&a, &[0.0], &[0.5], &[0.2, 0.0], &[-1.0, 0.0], 1e6).unwrap();
        assert!(set.is_empty());
        assert_eq!(
            noisy_margin_separation_set(&a, &[0.1], &[0.0], &[0.9, 0.0], &[-1.0, 0.0], 0.2).unwrap(),
            margin_separation_set(&a, &[0.1], &[0.9, 0.0], &[-1.0, 0.0], 0.2).unwrap()
        );
    }

    #[test]
    fn conditional_kernel() {
        assert_eq!(conditional_separation_probability(0.5, -0.5, 1.0), 0.5);
        assert_eq!(conditional_separation_probability(0.3, 0.3, 1.0), 0.0);
        // Clipped to the dither range.
        assert_eq!(conditional_separation_probability(5.0, -5.0, 1.0), 1.0);
        assert_eq!(conditional_separation_probability(-0.2, 0.7, 2.0), conditional_separation_probability(0.7, -0.2, 2.0));
    }

    #[test]
    fn identical_points_never_separate() {
        let e = MeasurementEnsemble::new(RowLaw::Gaussian, 3, 1, 1.0).unwrap();
        let x = [0.1, 0.2, 0.3];
        let (p, se) = separation_probability(&e, &x, &x, 100, &SeedPlan::new(0)).unwrap();
        assert_eq!((p, se), (0.0, 0.0));
    }

    #[test]
    fn chain_examples() {
        let d = SignalSetDescriptor::l1l2_ball(2.0, 2, 1.0).unwrap();
        let c = metric_chain(&[0.0, 0.0], &[0.1, 0.0], 0.3, &d).unwrap();
        assert!(c.points.is_empty());
        let c = metric_chain(&[0.0, 0.0], &[1.0, 0.0], 0.3, &d).unwrap();
        assert_eq!(c.points.len(), 3);
        for (k, p) in c.points.iter().enumerate() {
            assert!((p[0] - 0.25 * (k + 1) as f64).abs() < 1e-15);
        }
        assert!(c.verify(&[0.0, 0.0], &[1.0, 0.0], 0.3, 1e-12));
        assert!(metric_chain(&[0.0, 0.0], &[1.0, 0.0], 0.0, &d).is_err());
    }

    #[test]
    fn sparse_chain_stays_in_doubled_sparse_ball() {
        let d = SignalSetDescriptor::sparse_ball(2, 8, 1.0).unwrap();
        let x = [0.6, 0.0, 0.0, -0.3, 0.0, 0.0, 0.0, 0.0];
        let y = [0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.7, 0.0];
        let c = metric_chain(&x, &y, 0.1, &d).unwrap();
        let bound = norm2(&x).max(norm2(&y));
        for p in &c.points {
            assert!(crate::linalg::norm0(p) <= 4);
            assert!(norm2(p) <= bound + 1e-12);
        }
        assert!(c.verify(&x, &y, 0.1, 1e-12));
    }

    #[test]
    fn stability_examples() {
        let row = [1.0, 0.0];
        let (x, y) = ([1.0, 0.0], [-1.0, 0.0]);
        assert!(stability_predicate(&row, 0.0, &x, &y, &x, &y, 0.4, 2.0).unwrap());
        // Perturbing x by more than θr′/3 voids the hypotheses.
        assert!(!stability_predicate(&row, 0.0, &x, &y, &[0.5, 0.0], &y, 0.4, 2.0).unwrap());
        assert!(stability_predicate(&row, 0.0, &x, &y, &x, &y, 0.4, 3.0).is_err());
    }

    #[test]
    fn bernoulli_pair_is_blind_without_dither() {
        let (x, y) = bernoulli_blind_pair();
        let a = all_sign_vectors(2).unwrap();
        assert_eq!(separation_count(&a, &[0.0; 4], &x, &y).unwrap(), 0);
        assert!((dist2(&x, &y) - 0.459_505_841).abs() < 1e-8);
    }

    #[test]
    fn audit_of_identical_pairs() {
        let a = one_row();
        let pairs = vec![(vec![0.5, 0.5], vec![0.5, 0.5]); 3];
        let r = tessellation_audit(&a, &[0.0], &pairs, 0.1, &DEFAULT_THETAS, 1.0).unwrap();
        assert!(r.pairs.iter().all(|p| p.hamming_fraction == 0.0));
        assert!(r.summary.is_none());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("pair_id,distance,hamming_fraction,margin_count_theta_0"));
        assert!(text.trim_end().ends_with("eligible=0"));
    }
}
