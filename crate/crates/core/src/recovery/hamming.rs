//! Hamming-consistency recovery: `min_z d_H(q_corr, sign(Az + τ))` over `T`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, lex_cmp, norm2, Matrix};
use crate::quantize::{sign, Sign};
use crate::recovery::convex::backprojection;
use crate::recovery::net::{random_support, Net};
use crate::recovery::projection::project_l2;
use crate::recovery::{RecoveryResult, SolverMeta};
use crate::seed::{SeedPlan, Stream};
use crate::signal::{sample_direction, SignalSet, SignalSetDescriptor};

/// `d_H(q, sign(Az + τ))`.
pub fn hamming_objective(a: &Matrix, dither: &[f64], q: &[Sign], z: &[f64]) -> Result<usize> {
    check_dim(a.cols(), z.len())?;
    check_dim(a.rows(), dither.len())?;
    check_dim(a.rows(), q.len())?;
    Ok(a.iter_rows()
        .zip(dither)
        .zip(q)
        .filter(|((row, t), qi)| sign(dot(row, z) + *t) != **qi)
        .count())
}

/// Exact minimizer over the points of a net. Ties go to the smaller norm and
/// then to the lexicographically smaller point.
pub fn hamming_recover_net(a: &Matrix, dither: &[f64], q_corr: &[Sign], net: &Net) -> Result<RecoveryResult> {
    if net.is_empty() {
        return Err(Error::Precondition("net is empty".into()));
    }
    check_dim(a.cols(), net.dim())?;
    let scored = net
        .points
        .par_iter()
        .map(|z| hamming_objective(a, dither, q_corr, z).map(|obj| (obj, norm2(z), z)))
        .collect::<Result<Vec<_>>>()?;
    let (obj, _, z) = scored
        .into_iter()
        .min_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)).then_with(|| lex_cmp(x.2, y.2)))
        .expect("net is nonempty");
    Ok(RecoveryResult {
        x_hat: z.clone(),
        objective: obj as f64,
        meta: SolverMeta {
            iterations: net.len(),
            restarts: 0,
            converged: true,
        },
    })
}

/// Knobs of the local search.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchOptions {
    /// Random restarts in addition to the warm-started run.
    pub restarts: usize,
    /// Maximum improvement sweeps per run.
    pub iters: usize,
    pub seed: SeedPlan,
    /// Starting point of the first run; defaults to [`warm_start`].
    pub warm_start: Option<Vec<f64>>,
    /// Random in-support directions probed per sweep.
    pub random_directions: usize,
    /// Re-centering passes after the last strict improvement.
    pub recenter_passes: usize,
}

impl LocalSearchOptions {
    pub fn new(restarts: usize, iters: usize, seed: SeedPlan) -> Self {
        Self {
            restarts,
            iters,
            seed,
            warm_start: None,
            random_directions: 4,
            recenter_passes: 3,
        }
    }
}

/// Multi-restart local search for the sparse Hamming program.
pub fn hamming_recover_local(
    a: &Matrix,
    dither: &[f64],
    q_corr: &[Sign],
    descriptor: &SignalSetDescriptor,
    restarts: usize,
    iters: usize,
    seed: &SeedPlan,
) -> Result<RecoveryResult> {
    hamming_recover_local_with(a, dither, q_corr, descriptor, &LocalSearchOptions::new(restarts, iters, *seed))
}

/// Hard-thresholded backprojection: the `s` largest entries of
/// `(λ̂/m) Aᵀq`, clipped to the radius. `λ̂` is read off the dither as
/// `max |τ_i|` (1 for undithered measurements).
pub fn warm_start(a: &Matrix, dither: &[f64], q: &[Sign], descriptor: &SignalSetDescriptor) -> Result<Vec<f64>> {
    let SignalSet::SparseBall { s, .. } = descriptor.set else {
        return Err(Error::Unsupported("warm start needs a sparse ball".into()));
    };
    let lambda = dither.iter().fold(0.0f64, |acc, t| acc.max(t.abs()));
    let lambda = if lambda > 0.0 { lambda } else { 1.0 };
    let c = backprojection(a, q, lambda)?;
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&i, &j| c[j].abs().total_cmp(&c[i].abs()).then(i.cmp(&j)));
    let mut z = vec![0.0; c.len()];
    for &i in order.iter().take(s) {
        z[i] = c[i];
    }
    Ok(project_l2(&z, descriptor.radius))
}

pub fn hamming_recover_local_with(
    a: &Matrix,
    dither: &[f64],
    q_corr: &[Sign],
    descriptor: &SignalSetDescriptor,
    opts: &LocalSearchOptions,
) -> Result<RecoveryResult> {
    let SignalSet::SparseBall { s, n } = descriptor.set else {
        return Err(Error::Unsupported("local Hamming search needs a sparse ball".into()));
    };
    check_dim(n, a.cols())?;
    check_dim(a.rows(), dither.len())?;
    check_dim(a.rows(), q_corr.len())?;
    let start = match &opts.warm_start {
        Some(z) => {
            check_dim(n, z.len())?;
            z.clone()
        }
        None => warm_start(a, dither, q_corr, descriptor)?,
    };
    let columns: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let problem = Problem {
        a,
        columns: &columns,
        dither,
        q: q_corr,
        s,
        radius: descriptor.radius,
    };

    let runs: Vec<Result<Run>> = (0..=opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = opts.seed.rng(Stream::Search, k as u64);
            let z0 = if k == 0 {
                start.clone()
            } else {
                let support = random_support(&mut rng, n, s);
                let dir = sample_direction(&mut rng, s);
                let len = descriptor.radius * rng.random::<f64>();
                let mut z = vec![0.0; n];
                for (i, d) in support.iter().zip(dir) {
                    z[*i] = d * len;
                }
                z
            };
            problem.search(z0, opts, &mut rng)
        })
        .collect();

    let mut best: Option<Run> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one run");
    let objective = hamming_objective(a, dither, q_corr, &best.z)?;
    debug_assert_eq!(objective, best.objective);
    Ok(RecoveryResult {
        x_hat: best.z,
        objective: objective as f64,
        meta: SolverMeta {
            iterations: best.sweeps,
            restarts: opts.restarts,
            converged: best.converged,
        },
    })
}

struct Problem<'a> {
    a: &'a Matrix,
    columns: &'a [Vec<f64>],
    dither: &'a [f64],
    q: &'a [Sign],
    s: usize,
    radius: f64,
}

struct Run {
    z: Vec<f64>,
    objective: usize,
    sweeps: usize,
    converged: bool,
}

/// Outcome of an exact line search: the best count and where it is attained.
struct LineMin {
    count: usize,
    t: f64,
    contains_origin: bool,
}

impl Problem<'_> {
    fn analog(&self, z: &[f64]) -> Vec<f64> {
        self.a
            .iter_rows()
            .zip(self.dither)
            .map(|(row, t)| dot(row, z) + t)
            .collect()
    }

    fn count(&self, analog: &[f64]) -> usize {
        analog.iter().zip(self.q).filter(|(v, qi)| sign(**v) != **qi).count()
    }

    /// Exact minimization of `t ↦ d_H(q, sign(analog + t·dv))` over `[lo, hi]`.
    ///
    /// The objective is piecewise constant with breakpoints `-analog_i/dv_i`;
    /// the sweep toggles one row per breakpoint. Among optimal intervals the
    /// one containing `t = 0` wins, then the widest; the midpoint is returned.
    fn line_min(&self, analog: &[f64], dv: &[f64], lo: f64, hi: f64) -> Option<LineMin> {
        if !(hi > lo) {
            return None;
        }
        let mut events: Vec<(f64, usize)> = analog
            .iter()
            .zip(dv)
            .enumerate()
            .filter(|(_, (_, d))| **d != 0.0)
            .map(|(i, (v, d))| (-v / d, i))
            .filter(|(b, _)| *b > lo && *b < hi)
            .collect();
        events.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));

        let first_end = events.first().map_or(hi, |e| e.0);
        let t0 = 0.5 * (lo + first_end);
        let mut mismatch: Vec<bool> = analog
            .iter()
            .zip(dv)
            .zip(self.q)
            .map(|((v, d), qi)| sign(v + t0 * d) != *qi)
            .collect();
        let mut count = mismatch.iter().filter(|b| **b).count();

        let width_floor = 1e-12 * (hi - lo);
        let mut best: Option<(usize, bool, f64, f64)> = None;
        let mut consider = |count: usize, left: f64, right: f64| {
            let width = right - left;
            if width <= width_floor {
                return;
            }
            let has_origin = left <= 0.0 && 0.0 <= right;
            let better = match best {
                None => true,
                Some((bc, bo, bw, _)) => {
                    count < bc || (count == bc && ((has_origin && !bo) || (has_origin == bo && width > bw)))
                }
            };
            if better {
                best = Some((count, has_origin, width, 0.5 * (left + right)));
            }
        };
        let mut left = lo;
        for &(b, i) in &events {
            consider(count, left, b);
            mismatch[i] = !mismatch[i];
            if mismatch[i] {
                count += 1;
            } else {
                count -= 1;
            }
            left = b;
        }
        consider(count, left, hi);
        best.map(|(count, contains_origin, _, t)| LineMin {
            count,
            t,
            contains_origin,
        })
    }

    /// Range of `t` keeping `‖z + t·d‖₂ <= R`.
    fn ball_range(&self, z: &[f64], d: &[f64]) -> Option<(f64, f64)> {
        let dd = dot(d, d);
        if dd == 0.0 {
            return None;
        }
        let zd = dot(z, d);
        let zz = dot(z, z);
        let disc = zd * zd - dd * (zz - self.radius * self.radius);
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        Some(((-zd - root) / dd, (-zd + root) / dd))
    }

    fn direction_image(&self, d: &[(usize, f64)]) -> Vec<f64> {
        let mut dv = vec![0.0; self.q.len()];
        for &(j, w) in d {
            for (out, c) in dv.iter_mut().zip(&self.columns[j]) {
                *out += w * c;
            }
        }
        dv
    }

    fn apply(&self, z: &mut [f64], analog: &mut [f64], d: &[(usize, f64)], t: f64) {
        for &(j, w) in d {
            z[j] += t * w;
            for (out, c) in analog.iter_mut().zip(&self.columns[j]) {
                *out += t * w * c;
            }
        }
    }

    fn search<R: Rng>(&self, z0: Vec<f64>, opts: &LocalSearchOptions, rng: &mut R) -> Result<Run> {
        let n = z0.len();
        let mut z = z0;
        let mut analog = self.analog(&z);
        let mut objective = self.count(&analog);
        let mut support: Vec<usize> = {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&i, &j| z[j].abs().total_cmp(&z[i].abs()).then(i.cmp(&j)));
            idx.truncate(self.s);
            idx.sort_unstable();
            idx
        };
        if opts.iters == 0 {
            return Ok(Run {
                z,
                objective,
                sweeps: 0,
                converged: false,
            });
        }

        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < opts.iters {
            sweeps += 1;
            let mut improved = false;

            for &j in &support {
                let d = [(j, 1.0)];
                if let Some((lo, hi)) = self.ball_range(&z, &[unit(n, j)].concat()) {
                    let dv = &self.columns[j];
                    if let Some(best) = self.line_min(&analog, dv, lo, hi) {
                        if best.count < objective {
                            self.apply(&mut z, &mut analog, &d, best.t);
                            objective = best.count;
                            improved = true;
                        }
                    }
                }
            }

            for _ in 0..opts.random_directions {
                let dir = sample_direction(rng, self.s);
                let d: Vec<(usize, f64)> = support.iter().copied().zip(dir).collect();
                let mut full = vec![0.0; n];
                for &(j, w) in &d {
                    full[j] = w;
                }
                if let Some((lo, hi)) = self.ball_range(&z, &full) {
                    let dv = self.direction_image(&d);
                    if let Some(best) = self.line_min(&analog, &dv, lo, hi) {
                        if best.count < objective {
                            self.apply(&mut z, &mut analog, &d, best.t);
                            objective = best.count;
                            improved = true;
                        }
                    }
                }
            }

            // Support swaps: drop `j`, then line-search the new coordinate `k`.
            for slot in 0..support.len() {
                let j = support[slot];
                let mut z_drop = z.clone();
                let zj = z_drop[j];
                z_drop[j] = 0.0;
                let analog_drop: Vec<f64> = analog
                    .iter()
                    .zip(&self.columns[j])
                    .map(|(v, c)| v - zj * c)
                    .collect();
                let rest = (self.radius * self.radius - dot(&z_drop, &z_drop)).max(0.0).sqrt();
                let mut best_swap: Option<(usize, LineMin)> = None;
                for k in (0..n).filter(|k| !support.contains(k)) {
                    if let Some(best) = self.line_min(&analog_drop, &self.columns[k], -rest, rest) {
                        if best.count < objective && best_swap.as_ref().is_none_or(|(_, b)| best.count < b.count) {
                            best_swap = Some((k, best));
                        }
                    }
                }
                if let Some((k, best)) = best_swap {
                    z = z_drop;
                    analog = analog_drop;
                    self.apply(&mut z, &mut analog, &[(k, 1.0)], best.t);
                    objective = best.count;
                    support[slot] = k;
                    support.sort_unstable();
                    improved = true;
                }
            }

            if !improved {
                converged = true;
                break;
            }
        }

        // Move to the middle of the current cell along each coordinate without
        // changing the objective.
        for _ in 0..opts.recenter_passes {
            for &j in &support {
                if let Some((lo, hi)) = self.ball_range(&z, &unit(n, j)) {
                    if let Some(best) = self.line_min(&analog, &self.columns[j], lo, hi) {
                        if best.count < objective || (best.count == objective && best.contains_origin) {
                            self.apply(&mut z, &mut analog, &[(j, 1.0)], best.t);
                            objective = best.count;
                        }
                    }
                }
            }
        }
        // Guard against drift from the incremental analog updates.
        let z = project_l2(&z, self.radius);
        let objective = self.count(&self.analog(&z));
        Ok(Run {
            z,
            objective,
            sweeps,
            converged,
        })
    }
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}
