//! Constructive covering nets `N(T, r)` for the exhaustive Hamming program.

use std::io::{BufRead, Write};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist2, norm2};
use crate::seed::{SeedPlan, Stream};
use crate::signal::{membership, sample_direction, sample_signal, SignalSet, SignalSetDescriptor};

/// Default cap on the number of net points.
pub const DEFAULT_NET_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub points: Vec<Vec<f64>>,
    pub radius_target: f64,
    /// Largest distance from a fresh probe sample to the net.
    pub radius_empirical: f64,
}

impl Net {
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes the net as CSV: a `# n,count,r,radius_empirical` header line
    /// followed by one point per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# n,count,r,radius_empirical")?;
        writeln!(
            w,
            "# {},{},{:e},{:e}",
            self.dim(),
            self.len(),
            self.radius_target,
            self.radius_empirical
        )?;
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let bad = |reason: String| Error::Schema {
            file: "<net>".into(),
            reason,
        };
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| bad("truncated net file".into()))?
                .map_err(|e| Error::io("<net>", e))
        };
        let _ = next()?;
        let header = next()?;
        let fields: Vec<&str> = header.trim_start_matches('#').trim().split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 header fields, got {}", fields.len())));
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(e.to_string()));
        let n = parse(fields[0])? as usize;
        let count = parse(fields[1])? as usize;
        let radius_target = parse(fields[2])?;
        let radius_empirical = parse(fields[3])?;
        let mut points = Vec::with_capacity(count);
        for _ in 0..count {
            let line = next()?;
            let p = line.split(',').map(parse).collect::<Result<Vec<f64>>>()?;
            if p.len() != n {
                return Err(bad(format!("point of dimension {} in a net of dimension {n}", p.len())));
            }
            points.push(p);
        }
        Ok(Net {
            points,
            radius_target,
            radius_empirical,
        })
    }
}

/// Builds a net of `T` with probe-certified covering radius at most `r`.
pub fn build_net(descriptor: &SignalSetDescriptor, r: f64, probe_count: usize, seed: &SeedPlan) -> Result<Net> {
    build_net_with_budget(descriptor, r, probe_count, seed, DEFAULT_NET_BUDGET)
}

pub fn build_net_with_budget(
    descriptor: &SignalSetDescriptor,
    r: f64,
    probe_count: usize,
    seed: &SeedPlan,
    budget: usize,
) -> Result<Net> {
    if !(r > 0.0) {
        return Err(Error::param("r", "must be positive"));
    }
    descriptor.validate()?;
    let n = descriptor.dim();
    let radius = descriptor.radius;

    if let SignalSet::FiniteSet { points } = &descriptor.set {
        return Ok(Net {
            points: points.clone(),
            radius_target: r,
            radius_empirical: 0.0,
        });
    }
    if r >= radius {
        // Every point of T lies within R of the origin.
        let origin = vec![0.0; n];
        let radius_empirical = probe_radius(descriptor, std::slice::from_ref(&origin), probe_count, seed)?;
        return Ok(Net {
            points: vec![origin],
            radius_target: r,
            radius_empirical,
        });
    }

    let points = match &descriptor.set {
        SignalSet::SparseBall { s, n } => {
            let supports = binomial(*n, *s);
            if supports.is_none_or(|c| c > budget as u128) {
                return Err(Error::BudgetExceeded {
                    needed: supports.map_or(usize::MAX, |c| c.min(usize::MAX as u128) as usize),
                    budget,
                });
            }
            let supports = supports.unwrap() as usize;
            let local_budget = budget / supports;
            // A net of the s-dimensional ball of radius R, replicated on every support.
            let ball = SignalSetDescriptor::l1l2_ball(*s as f64, *s, radius)?;
            let local = greedy_net(&ball, r, probe_count, seed, local_budget.max(1), true)?;
            let mut out: Vec<Vec<f64>> = Vec::with_capacity(local.len() * supports);
            let mut seen_origin = false;
            for support in Combinations::new(*n, *s) {
                for p in &local {
                    if p.iter().all(|v| *v == 0.0) {
                        if seen_origin {
                            continue;
                        }
                        seen_origin = true;
                    }
                    let mut x = vec![0.0; *n];
                    for (k, &i) in support.iter().enumerate() {
                        x[i] = p[k];
                    }
                    out.push(x);
                }
            }
            if out.len() > budget {
                return Err(Error::BudgetExceeded {
                    needed: out.len(),
                    budget,
                });
            }
            out
        }
        _ => greedy_net(descriptor, r, probe_count, seed, budget, false)?,
    };
    let radius_empirical = probe_radius(descriptor, &points, probe_count, &seed.child(1))?;
    Ok(Net {
        points,
        radius_target: r,
        radius_empirical,
    })
}

/// Greedy farthest-point net over candidate samples, extended with any probe
/// that is still farther than `r` until a fresh probe batch certifies it.
fn greedy_net(
    descriptor: &SignalSetDescriptor,
    r: f64,
    probe_count: usize,
    seed: &SeedPlan,
    budget: usize,
    volume_uniform: bool,
) -> Result<Vec<Vec<f64>>> {
    let n = descriptor.dim();
    let pool_size = probe_count.max(64).max(4 * budget.min(50_000));
    let mut rng = seed.rng(Stream::Net, 0);
    let mut pool: Vec<Vec<f64>> = Vec::with_capacity(pool_size + 2 * n);
    // Extreme points help the greedy pass reach the boundary quickly.
    for i in 0..n {
        for sgn in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sgn * descriptor.radius;
            if membership(descriptor, &e, 1e-12)? {
                pool.push(e);
            }
        }
    }
    for _ in 0..pool_size {
        pool.push(draw_point(descriptor, &mut rng, volume_uniform)?);
    }

    let mut net = vec![vec![0.0; n]];
    let mut dist: Vec<f64> = pool.iter().map(|p| norm2(p)).collect();
    loop {
        let (far, &d) = dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("pool is nonempty");
        if d <= r * 0.9 {
            break;
        }
        if net.len() >= budget {
            return Err(Error::BudgetExceeded {
                needed: net.len() + 1,
                budget,
            });
        }
        let p = pool[far].clone();
        for (di, q) in dist.iter_mut().zip(&pool) {
            *di = di.min(dist2(q, &p));
        }
        net.push(p);
    }

    for round in 0..64u64 {
        let mut probe_rng = seed.rng(Stream::Probe, round);
        let mut added = false;
        for _ in 0..probe_count.max(1) {
            let p = draw_point(descriptor, &mut probe_rng, volume_uniform)?;
            let d = net.iter().map(|x| dist2(x, &p)).fold(f64::INFINITY, f64::min);
            if d > r {
                if net.len() >= budget {
                    return Err(Error::BudgetExceeded {
                        needed: net.len() + 1,
                        budget,
                    });
                }
                net.push(p);
                added = true;
            }
        }
        if !added {
            return Ok(net);
        }
    }
    Err(Error::Precondition("net construction did not certify after 64 probe rounds".into()))
}

fn draw_point<R: Rng + ?Sized>(descriptor: &SignalSetDescriptor, rng: &mut R, volume_uniform: bool) -> Result<Vec<f64>> {
    let n = descriptor.dim();
    if volume_uniform {
        // Uniform in the Euclidean ball of radius R.
        let dir = sample_direction(rng, n);
        let len = descriptor.radius * rng.random::<f64>().powf(1.0 / n as f64);
        return Ok(dir.into_iter().map(|v| v * len).collect());
    }
    let trial: u64 = rng.random();
    sample_signal(descriptor, &SeedPlan::new(trial), 0)
}

/// Largest distance from `probe_count` fresh samples of `T` to `points`.
pub fn probe_radius(descriptor: &SignalSetDescriptor, points: &[Vec<f64>], probe_count: usize, seed: &SeedPlan) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..probe_count as u64 {
        let p = sample_signal(descriptor, seed, k)?;
        let d = points.iter().map(|x| dist2(x, &p)).fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    Ok(worst)
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc.checked_mul(n as u128 - i)? / (i + 1);
    }
    Some(acc)
}

/// Lexicographic `k`-subsets of `0..n`.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut c = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if c[i] < self.n - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                self.current = Some(c);
                break;
            }
        }
        Some(out)
    }
}

/// Uniformly random subset, used for cheap support sampling elsewhere.
pub(crate) fn random_support<R: Rng + ?Sized>(rng: &mut R, n: usize, s: usize) -> Vec<usize> {
    index::sample(rng, n, s).into_vec()
}
