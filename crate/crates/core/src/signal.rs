//! Signal sets `T` and test-signal generation.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{norm1, norm2};
use crate::recovery::project_intersection;
use crate::seed::{SeedPlan, Stream};

/// Shape of the signal set, before scaling by the radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSet {
    /// `Σ_{s,n}`: at most `s` nonzeros, Euclidean norm at most one.
    SparseBall { s: usize, n: usize },
    /// `√s B₁ⁿ ∩ B₂ⁿ`. The effective sparsity may be fractional, which
    /// happens for local intersections such as `(U - U) ∩ r B₂ⁿ`.
    #[serde(rename = "l1l2_ball")]
    L1L2Ball { s: f64, n: usize },
    /// An explicit list of points (already at scale; the radius only bounds them).
    FiniteSet { points: Vec<Vec<f64>> },
}

/// A signal set together with its Euclidean radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSetDescriptor {
    #[serde(flatten)]
    pub set: SignalSet,
    pub radius: f64,
}

impl SignalSetDescriptor {
    pub fn sparse_ball(s: usize, n: usize, radius: f64) -> Result<Self> {
        Self::new(SignalSet::SparseBall { s, n }, radius)
    }

    pub fn l1l2_ball(s: f64, n: usize, radius: f64) -> Result<Self> {
        Self::new(SignalSet::L1L2Ball { s, n }, radius)
    }

    pub fn finite_set(points: Vec<Vec<f64>>, radius: f64) -> Result<Self> {
        Self::new(SignalSet::FiniteSet { points }, radius)
    }

    /// A finite set whose radius is the largest point norm (or 1 for `{0}`).
    pub fn finite_set_auto(points: Vec<Vec<f64>>) -> Result<Self> {
        let r = points.iter().map(|p| norm2(p)).fold(0.0, f64::max);
        Self::finite_set(points, if r > 0.0 { r } else { 1.0 })
    }

    pub fn new(set: SignalSet, radius: f64) -> Result<Self> {
        let d = Self { set, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::InvalidDescriptor(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        match &self.set {
            SignalSet::SparseBall { s, n } => {
                if *s < 1 || s > n {
                    return Err(Error::InvalidDescriptor(format!(
                        "sparsity must satisfy 1 <= s <= n, got s={s}, n={n}"
                    )));
                }
            }
            SignalSet::L1L2Ball { s, n } => {
                if !(*s >= 1.0) || *s > *n as f64 {
                    return Err(Error::InvalidDescriptor(format!(
                        "effective sparsity must satisfy 1 <= s <= n, got s={s}, n={n}"
                    )));
                }
            }
            SignalSet::FiniteSet { points } => {
                let Some(first) = points.first() else {
                    return Err(Error::InvalidDescriptor("finite set is empty".into()));
                };
                let n = first.len();
                if n == 0 {
                    return Err(Error::InvalidDescriptor("points have dimension 0".into()));
                }
                for p in points {
                    check_dim(n, p.len())?;
                    if norm2(p) > self.radius * (1.0 + 1e-12) {
                        return Err(Error::InvalidDescriptor(format!(
                            "point of norm {} lies outside radius {}",
                            norm2(p),
                            self.radius
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        match &self.set {
            SignalSet::SparseBall { n, .. } | SignalSet::L1L2Ball { n, .. } => *n,
            SignalSet::FiniteSet { points } => points[0].len(),
        }
    }

    /// Radii `(ℓ1, ℓ2)` of the convex body `R(√s B₁ⁿ ∩ B₂ⁿ)` used as the convex
    /// relaxation. `None` for finite sets.
    pub fn l1_l2_radii(&self) -> Option<(f64, f64)> {
        match &self.set {
            SignalSet::SparseBall { s, .. } => Some(((*s as f64).sqrt() * self.radius, self.radius)),
            SignalSet::L1L2Ball { s, .. } => Some((s.sqrt() * self.radius, self.radius)),
            SignalSet::FiniteSet { .. } => None,
        }
    }

    /// Convex relaxation `R(√s B₁ⁿ ∩ B₂ⁿ)` of a sparse ball; convex sets map to themselves.
    pub fn convex_relaxation(&self) -> Option<SignalSetDescriptor> {
        match &self.set {
            SignalSet::SparseBall { s, n } => Some(SignalSetDescriptor {
                set: SignalSet::L1L2Ball { s: *s as f64, n: *n },
                radius: self.radius,
            }),
            SignalSet::L1L2Ball { .. } => Some(self.clone()),
            SignalSet::FiniteSet { .. } => None,
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(self.set, SignalSet::L1L2Ball { .. })
    }
}

/// Membership test `x ∈ T`, allowing an additive slack `tol` on every norm
/// constraint. For sparse balls, entries with `|x_i| <= tol` count as zero.
pub fn membership(descriptor: &SignalSetDescriptor, x: &[f64], tol: f64) -> Result<bool> {
    check_dim(descriptor.dim(), x.len())?;
    let r = descriptor.radius;
    Ok(match &descriptor.set {
        SignalSet::SparseBall { s, .. } => {
            let support = x.iter().filter(|v| v.abs() > tol).count();
            support <= *s && norm2(x) <= r + tol
        }
        SignalSet::L1L2Ball { s, .. } => norm1(x) <= s.sqrt() * r + tol && norm2(x) <= r + tol,
        SignalSet::FiniteSet { points } => points
            .iter()
            .any(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= tol)),
    })
}

/// Draws a test signal from `T` for the given trial.
///
/// Sparse balls: uniform support, uniform direction on that support, radius
/// uniform in `(0, R]`. `ℓ1 ∩ ℓ2` balls: a Gaussian direction scaled uniformly
/// in `(0, R]` and projected onto the body. Finite sets: a uniform point.
pub fn sample_signal(descriptor: &SignalSetDescriptor, seed: &SeedPlan, trial: u64) -> Result<Vec<f64>> {
    descriptor.validate()?;
    let mut rng = seed.rng(Stream::Signal, trial);
    let n = descriptor.dim();
    let r = descriptor.radius;
    let x = match &descriptor.set {
        SignalSet::SparseBall { s, .. } => {
            let support = index::sample(&mut rng, n, *s);
            let mut x = vec![0.0; n];
            let dir: Vec<f64> = sample_direction(&mut rng, *s);
            let len = r * (1.0 - rng.random::<f64>());
            for (k, i) in support.iter().enumerate() {
                x[i] = len * dir[k];
            }
            x
        }
        SignalSet::L1L2Ball { .. } => {
            let (l1, l2) = descriptor.l1_l2_radii().expect("convex body");
            let dir = sample_direction(&mut rng, n);
            let len = r * (1.0 - rng.random::<f64>());
            let v: Vec<f64> = dir.iter().map(|d| d * len).collect();
            project_intersection(&v, l1, l2, 1e-12, 10_000)?
        }
        SignalSet::FiniteSet { points } => points[rng.random_range(0..points.len())].clone(),
    };
    debug_assert!(membership(descriptor, &x, 1e-9)?);
    if !membership(descriptor, &x, 1e-9)? {
        return Err(Error::Precondition("sampled signal left the signal set".into()));
    }
    Ok(x)
}

/// Uniform direction on the unit sphere of `R^k`.
pub(crate) fn sample_direction<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let norm = norm2(&g);
        if norm > 1e-300 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}
