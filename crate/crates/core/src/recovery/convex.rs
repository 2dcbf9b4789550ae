//! Closed-form solver for the correlation-maximization program
//! `max_{z ∈ conv(T)} (1/m)⟨q, Az⟩ - (1/2λ)‖z‖₂²`.
//!
//! Completing the square gives `φ(z) = (‖c‖² - ‖c - z‖²) / (2λ)` with
//! `c = (λ/m) Aᵀq`, so the maximizer over a convex set is `Proj(c)`.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm2, scale, Matrix};
use crate::quantize::Sign;
use crate::recovery::projection::project_intersection;
use crate::recovery::{RecoveryResult, SolverMeta};
use crate::seed::{SeedPlan, Stream};
use crate::signal::{sample_signal, SignalSet, SignalSetDescriptor};

const PROJECTION_TOL: f64 = 1e-10;
const PROJECTION_MAX_ITER: usize = 10_000;
/// Feasible points checked against the variational inequality after solving.
pub const CERTIFICATE_SAMPLES: u64 = 10_000;
/// Largest finite set whose hull projection is attempted.
pub const MAX_HULL_POINTS: usize = 4096;

/// `(λ/m) Aᵀ q`: the unconstrained maximizer of `φ`.
pub fn backprojection(a: &Matrix, q: &[Sign], lambda: f64) -> Result<Vec<f64>> {
    check_dim(a.rows(), q.len())?;
    let qf: Vec<f64> = q.iter().map(|s| f64::from(*s)).collect();
    let atq = a.tr_mul_vec(&qf)?;
    Ok(scale(lambda / a.rows() as f64, &atq))
}

/// `φ(z) = (1/m)⟨q, Az⟩ - (1/2λ)‖z‖₂²`, evaluated directly from `A`.
pub fn objective(a: &Matrix, q: &[Sign], lambda: f64, z: &[f64]) -> Result<f64> {
    check_dim(a.rows(), q.len())?;
    let az = a.mul_vec(z)?;
    let corr: f64 = az.iter().zip(q).map(|(v, s)| v * f64::from(*s)).sum();
    Ok(corr / a.rows() as f64 - dot(z, z) / (2.0 * lambda))
}

/// `φ` through the backprojection: `(⟨c, z⟩ - ‖z‖²/2) / λ`.
fn objective_from_center(center: &[f64], lambda: f64, z: &[f64]) -> f64 {
    (dot(center, z) - 0.5 * dot(z, z)) / lambda
}

/// Projection of `v` onto `conv(T)` for the descriptors the convex program supports.
pub fn project_hull(descriptor: &SignalSetDescriptor, v: &[f64]) -> Result<Vec<f64>> {
    check_dim(descriptor.dim(), v.len())?;
    match &descriptor.set {
        SignalSet::SparseBall { .. } | SignalSet::L1L2Ball { .. } => {
            let (l1, l2) = descriptor.l1_l2_radii().expect("convex relaxation exists");
            project_intersection(v, l1, l2, PROJECTION_TOL, PROJECTION_MAX_ITER)
        }
        SignalSet::FiniteSet { points } if points.len() <= MAX_HULL_POINTS => Ok(project_convex_hull(points, v)),
        SignalSet::FiniteSet { points } => Err(Error::Unsupported(format!(
            "convex hull of {} points exceeds the limit of {MAX_HULL_POINTS}",
            points.len()
        ))),
    }
}

/// Solves the convex program in closed form and certifies the answer against
/// the projection variational inequality on [`CERTIFICATE_SAMPLES`] random
/// feasible points.
pub fn convex_recover(
    a: &Matrix,
    q_corr: &[Sign],
    lambda: f64,
    descriptor: &SignalSetDescriptor,
) -> Result<RecoveryResult> {
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", "must be positive"));
    }
    check_dim(descriptor.dim(), a.cols())?;
    let center = backprojection(a, q_corr, lambda)?;
    let x_hat = project_hull(descriptor, &center)?;
    let value = objective_from_center(&center, lambda, &x_hat);

    let hull = descriptor.convex_relaxation().unwrap_or_else(|| descriptor.clone());
    let plan = SeedPlan::new(0xC0FFEE);
    let mut certified = true;
    for k in 0..CERTIFICATE_SAMPLES {
        let z = match &hull.set {
            SignalSet::FiniteSet { points } => random_hull_point(points, &plan, k),
            _ => sample_signal(&hull, &plan, k)?,
        };
        let vi: f64 = center
            .iter()
            .zip(&x_hat)
            .zip(&z)
            .map(|((c, x), zi)| (c - x) * (zi - x))
            .sum();
        if vi > 1e-9 || objective_from_center(&center, lambda, &z) > value + 1e-9 {
            certified = false;
            break;
        }
    }
    if !certified {
        return Err(Error::Precondition(
            "convex solution failed its optimality certificate".into(),
        ));
    }
    Ok(RecoveryResult {
        x_hat,
        objective: value,
        meta: SolverMeta {
            iterations: 1,
            restarts: 0,
            converged: true,
        },
    })
}

fn random_hull_point(points: &[Vec<f64>], plan: &SeedPlan, k: u64) -> Vec<f64> {
    use rand::Rng;
    use rand_distr::Exp1;
    let mut rng = plan.rng(Stream::Probe, k);
    let w: Vec<f64> = (0..points.len()).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = w.iter().sum();
    let mut z = vec![0.0; points[0].len()];
    for (p, wi) in points.iter().zip(&w) {
        crate::linalg::axpy(wi / total, p, &mut z);
    }
    z
}

/// Projection onto the convex hull of finitely many points: accelerated
/// projected gradient on the simplex of barycentric weights.
pub fn project_convex_hull(points: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let k = points.len();
    if k == 1 {
        return points[0].clone();
    }
    let combine = |w: &[f64]| {
        let mut z = vec![0.0; v.len()];
        for (p, wi) in points.iter().zip(w) {
            crate::linalg::axpy(*wi, p, &mut z);
        }
        z
    };
    // Lipschitz constant of w ↦ Pᵀ(Pw - v) is bounded by the Frobenius norm².
    let lip: f64 = points.iter().map(|p| dot(p, p)).sum::<f64>().max(1e-300);
    let mut w = vec![1.0 / k as f64; k];
    let mut y = w.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let z = combine(&y);
        let resid: Vec<f64> = z.iter().zip(v).map(|(a, b)| a - b).collect();
        let step: Vec<f64> = y
            .iter()
            .zip(points)
            .map(|(yi, p)| yi - dot(p, &resid) / lip)
            .collect();
        let next = project_simplex(&step);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let change = norm2(&crate::linalg::sub(&next, &w));
        y = next
            .iter()
            .zip(&w)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        w = next;
        t = t_next;
        if change < 1e-14 {
            break;
        }
    }
    combine(&w)
}

/// Projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if x > t {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}
