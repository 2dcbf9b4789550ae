//! Independent reference implementations shared by the integration tests.
//!
//! Every oracle here is written from first principles and avoids the library
//! code it is compared against.

#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;

use dithered_onebit::linalg::Matrix;

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn soft(v: &[f64], theta: f64) -> Vec<f64> {
    v.iter().map(|x| x.signum() * (x.abs() - theta).max(0.0)).collect()
}

/// Bisects `θ` so that `soft(v, θ)` has `ℓ1` norm `radius`.
pub fn project_l1(v: &[f64], radius: f64) -> Vec<f64> {
    if norm1(v) <= radius {
        return v.to_vec();
    }
    let (mut lo, mut hi) = (0.0, v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm1(&soft(v, mid)) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    soft(v, 0.5 * (lo + hi))
}

pub fn project_l2(v: &[f64], radius: f64) -> Vec<f64> {
    let n = norm2(v);
    if n <= radius {
        v.to_vec()
    } else {
        v.iter().map(|x| x * radius / n).collect()
    }
}

/// Projection onto `{‖x‖₁ <= l1} ∩ {‖x‖₂ <= l2}`.
///
/// When neither single-ball projection is feasible both constraints are
/// active and the KKT point is `α·soft(v, θ)`; the ratio `‖soft‖₁/‖soft‖₂`
/// is nonincreasing in `θ`, so `θ` is found by bisection on that ratio.
pub fn project_intersection(v: &[f64], l1: f64, l2: f64) -> Vec<f64> {
    if norm1(v) <= l1 && norm2(v) <= l2 {
        return v.to_vec();
    }
    let p2 = project_l2(v, l2);
    if norm1(&p2) <= l1 {
        return p2;
    }
    let p1 = project_l1(v, l1);
    if norm2(&p1) <= l2 {
        return p1;
    }
    let target = l1 / l2;
    let (mut lo, mut hi) = (0.0, v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s = soft(v, mid);
        let n2 = norm2(&s);
        if n2 > 0.0 && norm1(&s) / n2 > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = soft(v, 0.5 * (lo + hi));
    let n2 = norm2(&s);
    s.iter().map(|x| x * l2 / n2).collect()
}

/// A point of `√s_eff B₁ⁿ ∩ B₂ⁿ` scaled by `radius`, spread over the body:
/// random direction and radius, sometimes sparsified, then shrunk to fit.
pub fn random_l1l2_point<R: Rng>(rng: &mut R, n: usize, l1: f64, l2: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    if rng.random::<f64>() < 0.5 {
        let keep = rng.random_range(1..=n);
        for x in g.iter_mut().skip(keep) {
            *x = 0.0;
        }
    }
    let n2 = norm2(&g).max(1e-300);
    let len = l2 * rng.random::<f64>().powf(1.0 / n as f64);
    let mut x: Vec<f64> = g.iter().map(|v| v * len / n2).collect();
    let n1 = norm1(&x);
    if n1 > l1 {
        x.iter_mut().for_each(|v| *v *= l1 / n1);
    }
    x
}

/// `E max_i |g_i|` for `g ~ N(0, I_n)`: `∫₀^∞ 1 - erf(t/√2)^n dt` by the
/// trapezoid rule. This is the mean width of `Σ_{1,n}`.
pub fn expected_max_abs_gaussian(n: usize) -> f64 {
    let h = 1e-4;
    let upper = 12.0;
    let f = |t: f64| 1.0 - statrs::function::erf::erf(t / std::f64::consts::SQRT_2).powi(n as i32);
    let steps = (upper / h) as usize;
    let mut total = 0.5 * (f(0.0) + f(upper));
    for k in 1..steps {
        total += f(k as f64 * h);
    }
    total * h
}

/// `P(H_{X,τ} separates x, y)` for Gaussian `X` and `λ` large enough that
/// `|⟨X,x⟩|, |⟨X,y⟩| <= λ` almost surely: `E|⟨X, x - y⟩| / (2λ)`.
pub fn gaussian_separation_probability(x: &[f64], y: &[f64], lambda: f64) -> f64 {
    dist(x, y) * (2.0 / std::f64::consts::PI).sqrt() / (2.0 * lambda)
}

/// Exact `P(H_{X,τ} separates x, y)` for Rademacher rows in the plane:
/// average over the four sign vectors of the covered fraction of
/// `[-λ, λ]`.
pub fn rademacher_separation_probability_2d(x: &[f64], y: &[f64], lambda: f64) -> f64 {
    let mut total = 0.0;
    for s0 in [-1.0, 1.0] {
        for s1 in [-1.0, 1.0] {
            let zx = s0 * x[0] + s1 * x[1];
            let zy = s0 * y[0] + s1 * y[1];
            // τ separates when it lies between -zx and -zy.
            let lo = (-zx).min(-zy).max(-lambda);
            let hi = (-zx).max(-zy).min(lambda);
            total += (hi - lo).max(0.0) / (2.0 * lambda);
        }
    }
    total / 4.0
}

/// Hamming count `#{i : sign(⟨a_i,z⟩ + τ_i) != q_i}` with `sign(0) = +1`.
pub fn hamming_count(a: &Matrix, dither: &[f64], q: &[i8], z: &[f64]) -> usize {
    (0..a.rows())
        .filter(|&i| {
            let v = dot(a.row(i), z) + dither[i];
            let s = if v >= 0.0 { 1 } else { -1 };
            s != q[i]
        })
        .count()
}

/// `(λ/m) Aᵀ q`.
pub fn backprojection(a: &Matrix, q: &[i8], lambda: f64) -> Vec<f64> {
    let m = a.rows() as f64;
    let mut c = vec![0.0; a.cols()];
    for (i, qi) in q.iter().enumerate() {
        for (cj, aij) in c.iter_mut().zip(a.row(i)) {
            *cj += f64::from(*qi) * aij;
        }
    }
    c.iter().map(|v| v * lambda / m).collect()
}

/// `φ(z) = (1/m)⟨q, Az⟩ - ‖z‖²/(2λ)` written through the backprojection.
pub fn phi_from_center(c: &[f64], lambda: f64, z: &[f64]) -> f64 {
    (dot(c, z) - 0.5 * dot(z, z)) / lambda
}

/// Median of a nonempty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// `√(s log(en/s))`.
pub fn sparse_width_scale(s: usize, n: usize) -> f64 {
    let (s, n) = (s as f64, n as f64);
    (s * (std::f64::consts::E * n / s).ln()).sqrt()
}
