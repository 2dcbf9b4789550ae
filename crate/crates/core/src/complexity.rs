//! Geometric complexity of signal sets and the sample-size calculators built
//! on them.
//!
//! All theorem constants default to 1. The underlying guarantees only hold
//! for some unspecified absolute constants, so the calculators are scaling
//! guides, not certified sample sizes.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{sample_rows, RowLaw};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist2, dot, norm2};
use crate::seed::{SeedPlan, Stream};
use crate::signal::{SignalSet, SignalSetDescriptor};
use crate::stats::mean_and_se;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub n_mc: usize,
}

/// `h_T(g) = sup_{x ∈ T} ⟨g, x⟩`, computed exactly.
pub fn support_function(descriptor: &SignalSetDescriptor, g: &[f64]) -> Result<f64> {
    check_dim(descriptor.dim(), g.len())?;
    let r = descriptor.radius;
    Ok(match &descriptor.set {
        SignalSet::SparseBall { s, .. } => r * top_k_sum_of_squares(g, *s).sqrt(),
        SignalSet::L1L2Ball { s, .. } => r * l1l2_support(g, *s),
        SignalSet::FiniteSet { points } => points
            .iter()
            .map(|p| dot(p, g))
            .fold(f64::NEG_INFINITY, f64::max),
    })
}

fn top_k_sum_of_squares(g: &[f64], k: usize) -> f64 {
    let mut sq: Vec<f64> = g.iter().map(|v| v * v).collect();
    if k < sq.len() {
        sq.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
        sq.truncate(k);
    }
    sq.iter().sum()
}

/// Support function of `√s B₁ⁿ ∩ B₂ⁿ`:
/// `min_{t >= 0} √s·t + ‖soft_threshold(g, t)‖₂`.
///
/// The objective is convex in `t`. Between consecutive breakpoints `|g|_(k+1)
/// <= t <= |g|_(k)` it equals `√s t + √(S₂ - 2tS₁ + kt²)` over the top-`k`
/// magnitudes, whose stationary points solve
/// `k(k-s)t² - 2S₁(k-s)t + S₁² - sS₂ = 0`; the minimum is among the
/// breakpoints and those roots.
fn l1l2_support(g: &[f64], s: f64) -> f64 {
    let mut u: Vec<f64> = g.iter().map(|v| v.abs()).collect();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let root_s = s.sqrt();
    let eval = |t: f64| {
        let tail: f64 = u.iter().map(|x| (x - t).max(0.0).powi(2)).sum();
        root_s * t + tail.sqrt()
    };
    let mut best = eval(0.0);
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in 1..=u.len() {
        s1 += u[k - 1];
        s2 += u[k - 1] * u[k - 1];
        let hi = u[k - 1];
        let lo = u.get(k).copied().unwrap_or(0.0);
        best = best.min(eval(hi));
        let kf = k as f64;
        let qa = kf * (kf - s);
        let qb = -2.0 * s1 * (kf - s);
        let qc = s1 * s1 - s * s2;
        let mut roots = Vec::with_capacity(2);
        if qa.abs() > 1e-300 {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                roots.push((-qb + sq) / (2.0 * qa));
                roots.push((-qb - sq) / (2.0 * qa));
            }
        } else if qb.abs() > 1e-300 {
            roots.push(-qc / qb);
        }
        for t in roots {
            if t >= lo && t <= hi {
                best = best.min(eval(t));
            }
        }
    }
    best
}

/// `E sup_{x∈T} |⟨G, x⟩|` by Monte Carlo over standard Gaussian `G`.
pub fn gaussian_mean_width(descriptor: &SignalSetDescriptor, n_mc: usize, seed: &SeedPlan) -> Result<WidthEstimate> {
    if n_mc < 2 {
        return Err(Error::param("n_mc", "need at least 2 draws for a standard error"));
    }
    descriptor.validate()?;
    let n = descriptor.dim();
    let values = (0..n_mc as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed.rng(Stream::Width, k);
            let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            abs_support(descriptor, &g)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(estimate(&values))
}

/// `E sup_{x∈T} |⟨(1/√m) Σ ε_i X_i, x⟩|` for rows drawn from `row_law`.
pub fn empirical_width(
    descriptor: &SignalSetDescriptor,
    row_law: RowLaw,
    m: usize,
    n_mc: usize,
    seed: &SeedPlan,
) -> Result<WidthEstimate> {
    if n_mc < 2 {
        return Err(Error::param("n_mc", "need at least 2 draws for a standard error"));
    }
    if m == 0 {
        return Err(Error::param("m", "must be positive"));
    }
    descriptor.validate()?;
    let n = descriptor.dim();
    let values = (0..n_mc as u64)
        .into_par_iter()
        .map(|k| {
            let rows = sample_rows(row_law, m, n, seed, Stream::Width, k)?;
            let mut rng = seed.rng(Stream::Custom(0xe5), k);
            let mut v = vec![0.0; n];
            for row in rows.iter_rows() {
                let eps = if rng.random::<bool>() { 1.0 } else { -1.0 };
                crate::linalg::axpy(eps, row, &mut v);
            }
            let scale = (m as f64).sqrt().recip();
            v.iter_mut().for_each(|x| *x *= scale);
            abs_support(descriptor, &v)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(estimate(&values))
}

fn abs_support(descriptor: &SignalSetDescriptor, g: &[f64]) -> Result<f64> {
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    Ok(support_function(descriptor, g)?.max(support_function(descriptor, &neg)?).max(0.0))
}

fn estimate(values: &[f64]) -> WidthEstimate {
    let (value, standard_error) = mean_and_se(values);
    WidthEstimate {
        value,
        standard_error,
        n_mc: values.len(),
    }
}

/// Monte Carlo settings for widths computed inside the calculators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthSettings {
    pub n_mc: usize,
    pub seed: u64,
}

impl Default for WidthSettings {
    fn default() -> Self {
        Self { n_mc: 2000, seed: 0x71d7 }
    }
}

/// Upper bound on `log N(T, r)` with leading constant `c`.
///
/// Sparse balls use `c·s·log(en / (s·min(r/R, 1)))`; finite sets `log k`;
/// other sets Sudakov's `c·ℓ_*²(T)/r²` with a Monte Carlo width.
pub fn covering_bound(descriptor: &SignalSetDescriptor, r: f64) -> Result<f64> {
    covering_bound_with(descriptor, r, 1.0, &WidthSettings::default())
}

pub fn covering_bound_with(descriptor: &SignalSetDescriptor, r: f64, c: f64, widths: &WidthSettings) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::param("r", format!("must be positive, got {r}")));
    }
    descriptor.validate()?;
    Ok(match &descriptor.set {
        SignalSet::SparseBall { s, n } => {
            let (s, n) = (*s as f64, *n as f64);
            let scale = (r / descriptor.radius).min(1.0);
            c * s * (std::f64::consts::E * n / (s * scale)).ln()
        }
        SignalSet::FiniteSet { points } => (points.len() as f64).ln(),
        SignalSet::L1L2Ball { .. } => {
            let w = gaussian_mean_width(descriptor, widths.n_mc, &SeedPlan::new(widths.seed))?.value;
            c * w * w / (r * r)
        }
    })
}

/// Named constants of the sample-size bounds. All default to 1; the dither
/// small-ball constants are functions of `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    /// Small-ball level `κ`.
    pub kappa: f64,
    /// Small-ball probability `δ`.
    pub delta: f64,
}

impl Default for TheoremConstants {
    fn default() -> Self {
        Self {
            c0: 1.0,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
            c5: 1.0,
            kappa: 1.0,
            delta: 1.0,
        }
    }
}

impl TheoremConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c0, self.c1, self.c2, self.c3, self.c4, self.c5, self.kappa, self.delta];
        if all.iter().all(|c| *c > 0.0 && c.is_finite()) {
            Ok(())
        } else {
            Err(Error::param("constants", "all theorem constants must be positive"))
        }
    }

    /// `c_τ = 1/(2λ)`: lower small-ball constant of the uniform dither.
    pub fn c_tau(lambda: f64) -> f64 {
        1.0 / (2.0 * lambda)
    }

    /// `C_τ = 1/λ`: upper small-ball constant, `P(|Z + τ| <= ε) <= C_τ ε`.
    pub fn upper_c_tau(lambda: f64) -> f64 {
        1.0 / lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    /// Uniform tessellation, subgaussian rows.
    TessSubgaussian,
    /// Uniform tessellation, heavy-tailed rows.
    TessHeavyTailed,
    /// Hamming recovery, subgaussian rows.
    RecoverSubgaussian,
    /// Hamming recovery, heavy-tailed rows.
    RecoverHeavyTailed,
    /// Convex recovery, subgaussian rows.
    Convex,
}

impl std::str::FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "tess-subgaussian" | "1.1" => Theorem::TessSubgaussian,
            "tess-heavy-tailed" | "1.2" => Theorem::TessHeavyTailed,
            "recover-subgaussian" | "1.3" => Theorem::RecoverSubgaussian,
            "recover-heavy-tailed" | "1.4" => Theorem::RecoverHeavyTailed,
            "convex" | "1.5" => Theorem::Convex,
            other => return Err(Error::param("theorem", format!("unknown theorem `{other}`"))),
        })
    }
}

/// Inputs of [`sufficient_m`]. Any complexity term left as `None` is derived
/// from `descriptor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremParams {
    /// Radius `R` with `T ⊂ R B₂ⁿ`.
    pub radius: f64,
    /// Target accuracy `ρ`.
    pub rho: f64,
    /// Dither amplitude; defaults to the smallest admissible value with the given constants.
    pub lambda: Option<f64>,
    /// Noise level `‖ν‖_{L²}` (or `σ`).
    #[serde(default)]
    pub sigma: f64,
    /// Corruption fraction `β`.
    #[serde(default)]
    pub beta: f64,
    pub descriptor: Option<SignalSetDescriptor>,
    /// Row law for empirical widths (heavy-tailed theorems).
    pub row_law: Option<RowLaw>,
    /// Gaussian width term of the theorem (`ℓ_*(T)`, `ℓ_*(T_r)` or `ℓ_*(U_ρ)`).
    pub width: Option<f64>,
    /// Empirical width term (`E(U_r)` or `E(T_r)`), taken as independent of `m`.
    pub empirical_width: Option<f64>,
    /// Covering term `log N(·, r)`.
    pub log_covering: Option<f64>,
    #[serde(default)]
    pub widths: WidthSettings,
}

impl TheoremParams {
    pub fn new(radius: f64, rho: f64) -> Self {
        Self {
            radius,
            rho,
            lambda: None,
            sigma: 0.0,
            beta: 0.0,
            descriptor: None,
            row_law: None,
            width: None,
            empirical_width: None,
            log_covering: None,
            widths: WidthSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficientM {
    pub m: u64,
    /// Covering scale `r` the bound was evaluated at.
    pub r: f64,
    pub lambda: f64,
    /// Whether the noise/corruption side conditions hold with the given constants.
    pub conditions_met: bool,
}

const M_CAP: u64 = 1 << 40;

/// Sample size sufficient for `theorem`, evaluated with `constants`.
pub fn sufficient_m(theorem: Theorem, params: &TheoremParams, constants: &TheoremConstants) -> Result<SufficientM> {
    constants.validate()?;
    let TheoremParams { radius, rho, sigma, beta, .. } = *params;
    if !(radius > 0.0) || !(rho > 0.0) {
        return Err(Error::param("rho", "R and ρ must be positive"));
    }
    if !(sigma >= 0.0) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::param("sigma", "σ must be nonnegative and β must lie in [0, 1]"));
    }
    let c = constants;
    let e = std::f64::consts::E;
    let terms = Terms::new(params);

    match theorem {
        Theorem::TessSubgaussian => {
            if rho >= radius {
                return Err(Error::param("rho", "the tessellation bound needs 0 < ρ < R"));
            }
            let lambda = params.lambda.unwrap_or(c.c0 * radius);
            let w = terms.gaussian(|d| Ok(LocalSet::Scaled(d.clone(), 1.0)))?;
            let rhs = c.c1 * radius * (e * radius / rho).ln() / rho.powi(3) * w * w;
            Ok(SufficientM {
                m: ceil_m(rhs),
                r: rho,
                lambda,
                conditions_met: true,
            })
        }
        Theorem::TessHeavyTailed => {
            if rho >= radius {
                return Err(Error::param("rho", "the tessellation bound needs 0 < ρ < R"));
            }
            let lambda = params.lambda.unwrap_or(c.c0 * radius);
            let r = c.c1 * rho * rho / radius;
            let log_n = terms.covering(r, c.c5, true)?;
            let m = solve_implicit(|m| {
                let ew = terms.empirical(m, |d| local_hull(d, r))?;
                Ok(c.c2 * ((radius * ew / (rho * rho)).powi(2) + radius * log_n / rho))
            })?;
            Ok(SufficientM {
                m,
                r,
                lambda,
                conditions_met: true,
            })
        }
        Theorem::RecoverSubgaussian => {
            let lambda = params.lambda.unwrap_or(c.c0 * (radius + sigma) + rho);
            let log_term = (e * lambda / rho).ln().sqrt();
            let r = c.c1 * rho / log_term;
            let w = terms.gaussian(|d| local_differences(d, r))?;
            let log_n = terms.covering(r, c.c5, false)?;
            let rhs = c.c2 * lambda * (w * w / rho.powi(3) + log_n / rho);
            Ok(SufficientM {
                m: ceil_m(rhs),
                r,
                lambda,
                conditions_met: sigma <= c.c3 * rho / log_term && beta <= c.c3 * rho / lambda,
            })
        }
        Theorem::RecoverHeavyTailed => {
            let lambda = params.lambda.unwrap_or(c.c0 * (radius + sigma) + rho);
            let r = c.c1 * rho * rho / lambda;
            let log_n = terms.covering(r, c.c5, false)?;
            let m = solve_implicit(|m| {
                let ew = terms.empirical(m, |d| local_differences(d, r))?;
                Ok(c.c2 * ((lambda * ew / (rho * rho)).powi(2) + lambda * log_n / rho))
            })?;
            Ok(SufficientM {
                m,
                r,
                lambda,
                conditions_met: sigma <= c.c3 * rho.powf(1.5) / lambda.sqrt() && beta <= c.c3 * rho / lambda,
            })
        }
        Theorem::Convex => {
            let lambda = params
                .lambda
                .unwrap_or_else(|| c.c0 * (sigma + radius) * (c.c0 / rho).ln().max(1.0).sqrt());
            let r = c.c1 * rho / (e * lambda / rho).ln();
            let w = terms.gaussian(|d| local_hull(d, rho))?;
            let log_n = terms.covering(r, c.c5, false)?;
            let rhs = c.c2 * ((lambda * w / (rho * rho)).powi(2) + lambda * lambda * log_n / (rho * rho));
            let beta_max = max_beta_convex(c.c3 * rho / lambda);
            Ok(SufficientM {
                m: ceil_m(rhs),
                r,
                lambda,
                conditions_met: beta <= beta_max,
            })
        }
    }
}

/// Largest `β` in `(0, 1]` with `β √log(e/β) <= target`.
pub fn max_beta_convex(target: f64) -> f64 {
    let f = |b: f64| b * (std::f64::consts::E / b).ln().sqrt();
    if f(1.0) <= target {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn ceil_m(rhs: f64) -> u64 {
    if !rhs.is_finite() || rhs >= M_CAP as f64 {
        M_CAP
    } else {
        (rhs.ceil() as u64).max(1)
    }
}

/// Smallest `m` with `m >= rhs(m)`, found by doubling then bisection. The
/// right-hand side may depend on `m` through an empirical width.
fn solve_implicit(rhs: impl Fn(u64) -> Result<f64>) -> Result<u64> {
    let mut hi = 1u64;
    loop {
        if hi as f64 >= rhs(hi)? {
            break;
        }
        if hi >= M_CAP {
            return Ok(M_CAP);
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    if lo == 0 {
        return Ok(hi);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if mid as f64 >= rhs(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

struct Terms<'a> {
    params: &'a TheoremParams,
}

impl<'a> Terms<'a> {
    fn new(params: &'a TheoremParams) -> Self {
        Self { params }
    }

    fn descriptor(&self) -> Result<&SignalSetDescriptor> {
        self.params
            .descriptor
            .as_ref()
            .ok_or_else(|| Error::param("descriptor", "needed to derive complexity terms that were not supplied"))
    }

    fn seed(&self) -> SeedPlan {
        SeedPlan::new(self.params.widths.seed)
    }

    fn gaussian(&self, local: impl Fn(&SignalSetDescriptor) -> Result<LocalSet>) -> Result<f64> {
        if let Some(w) = self.params.width {
            return Ok(w);
        }
        let set = local(self.descriptor()?)?;
        set.width(|d| Ok(gaussian_mean_width(d, self.params.widths.n_mc, &self.seed())?.value))
    }

    fn empirical(&self, m: u64, local: impl Fn(&SignalSetDescriptor) -> Result<LocalSet>) -> Result<f64> {
        if let Some(w) = self.params.empirical_width {
            return Ok(w);
        }
        let law = self.params.row_law.unwrap_or(RowLaw::Gaussian);
        let set = local(self.descriptor()?)?;
        // Beyond this size the empirical width is statistically stable; cap the cost.
        let m = m.min(4096) as usize;
        let n_mc = self.params.widths.n_mc.clamp(2, 400);
        set.width(|d| Ok(empirical_width(d, law, m, n_mc, &self.seed())?.value))
    }

    fn covering(&self, r: f64, c: f64, of_hull: bool) -> Result<f64> {
        if let Some(v) = self.params.log_covering {
            return Ok(v);
        }
        let d = self.descriptor()?;
        let d = match (&d.set, of_hull) {
            (SignalSet::SparseBall { .. }, true) => d.convex_relaxation().expect("sparse ball relaxes"),
            _ => d.clone(),
        };
        covering_bound_with(&d, r, c, &self.params.widths)
    }
}

/// A local set whose width is either that of a descriptor scaled by a factor,
/// or the smaller of two such widths.
enum LocalSet {
    Scaled(SignalSetDescriptor, f64),
    MinOf(Box<LocalSet>, Box<LocalSet>),
}

impl LocalSet {
    fn width(&self, f: impl Fn(&SignalSetDescriptor) -> Result<f64> + Copy) -> Result<f64> {
        match self {
            LocalSet::Scaled(d, k) => Ok(k * f(d)?),
            LocalSet::MinOf(a, b) => Ok(a.width(f)?.min(b.width(f)?)),
        }
    }
}

/// `T_r = (T - T) ∩ r B₂ⁿ`, or a superset with a computable width.
fn local_differences(d: &SignalSetDescriptor, r: f64) -> Result<LocalSet> {
    let n = d.dim();
    match &d.set {
        SignalSet::SparseBall { s, .. } => Ok(LocalSet::Scaled(
            SignalSetDescriptor::sparse_ball((2 * s).min(n), n, r)?,
            1.0,
        )),
        SignalSet::L1L2Ball { .. } => local_hull(d, r),
        SignalSet::FiniteSet { points } => {
            let mut diffs: Vec<Vec<f64>> = vec![vec![0.0; n]];
            for p in points {
                for q in points {
                    if dist2(p, q) <= r && p != q {
                        diffs.push(p.iter().zip(q).map(|(a, b)| a - b).collect());
                    }
                }
            }
            let radius = diffs.iter().map(|v| norm2(v)).fold(0.0, f64::max).max(r);
            Ok(LocalSet::Scaled(SignalSetDescriptor::finite_set(diffs, radius)?, 1.0))
        }
    }
}

/// `U_r = (U - U) ∩ r B₂ⁿ` for `U = conv(T)`, or a superset with a computable width.
fn local_hull(d: &SignalSetDescriptor, r: f64) -> Result<LocalSet> {
    let n = d.dim();
    match d.l1_l2_radii() {
        Some((l1, _)) => {
            // U - U ⊂ 2R(√s B₁ ∩ B₂); intersect with r B₂.
            let l2 = r.min(2.0 * d.radius);
            let s_eff = ((2.0 * l1 / l2).powi(2)).clamp(1.0, n as f64);
            Ok(LocalSet::Scaled(SignalSetDescriptor::l1l2_ball(s_eff, n, l2)?, 1.0))
        }
        None => Ok(LocalSet::MinOf(
            Box::new(LocalSet::Scaled(d.clone(), 2.0)),
            Box::new(LocalSet::Scaled(SignalSetDescriptor::l1l2_ball(n as f64, n, r)?, 1.0)),
        )),
    }
}
