//! Config-driven Monte Carlo experiments.
//!
//! An [`ExperimentConfig`] (TOML, unknown keys rejected) describes one of five
//! experiment kinds over a grid of row laws, sample sizes, noise models and
//! corruption levels. [`run_experiment`] writes deterministic CSV results plus
//! a `manifest.json`; [`summarize`] aggregates recovery results per cell and
//! [`emit_plots`] turns a summary into a gnuplot script and its data file.
//!
//! Every trial derives its randomness from `SeedPlan::new(seed).child(trial)`,
//! so cells of a sweep share the signal of a given trial and their measurement
//! matrices are nested prefixes of one another (common random numbers).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::gaussian_mean_width;
use crate::ensemble::{default_lambda, sample_dither, sample_matrix, sample_noise, MeasurementEnsemble, NoiseModel, RowLaw};
use crate::error::{Error, Result};
use crate::linalg::dist2;
use crate::quantize::{corrupt_bits, empirical_quantizer_mean, one_bit_measure, quantizer_mean, CorruptionStrategy};
use crate::recovery::{
    build_net, convex_recover, hamming_objective, hamming_recover_local_with, hamming_recover_net, LocalSearchOptions, Net,
};
use crate::seed::SeedPlan;
use crate::signal::{sample_signal, SignalSet, SignalSetDescriptor};
use crate::stats::{median, quantile};
use crate::tessellation::{
    all_sign_vectors, bernoulli_blind_pair, hamming_fraction, tessellation_audit, TessellationReport, DEFAULT_THETAS,
};

/// Version of the [`TrialResult`] column set.
pub const SCHEMA_VERSION: u32 = 1;
/// Overrides the output directory of [`run_experiment`].
pub const OUTPUT_DIR_ENV: &str = "ONEBIT_OUTPUT_DIR";
/// Overrides the worker count of [`run_experiment`].
pub const WORKERS_ENV: &str = "ONEBIT_WORKERS";

const DEFAULT_OUTPUT_DIR: &str = "onebit-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TessellationAudit,
    RecoverySweep,
    QuantizerMeanCheck,
    BernoulliFailureDemo,
    WidthTable,
}

/// Axes of the experiment grid. Cells are the Cartesian product in the order
/// laws, m, noise, beta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default = "default_laws")]
    pub laws: Vec<RowLaw>,
    #[serde(default = "default_m")]
    pub m: Vec<usize>,
    #[serde(default = "default_noise")]
    pub noise: Vec<NoiseModel>,
    #[serde(default = "default_beta")]
    pub beta: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            laws: default_laws(),
            m: default_m(),
            noise: default_noise(),
            beta: default_beta(),
        }
    }
}

fn default_laws() -> Vec<RowLaw> {
    vec![RowLaw::Gaussian]
}

fn default_m() -> Vec<usize> {
    vec![400]
}

fn default_noise() -> Vec<NoiseModel> {
    vec![NoiseModel::None]
}

fn default_beta() -> Vec<f64> {
    vec![0.0]
}

/// Recovery program used by a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Solver {
    /// Multi-restart local search on the Hamming objective (sparse balls).
    Local {
        #[serde(default = "default_restarts")]
        restarts: usize,
        #[serde(default = "default_iters")]
        iters: usize,
    },
    /// Exact Hamming minimization over a net of radius `r`.
    Net {
        r: f64,
        #[serde(default = "default_probes")]
        probes: usize,
    },
    /// Closed-form convex program over `conv(T)`.
    Convex,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::Local {
            restarts: default_restarts(),
            iters: default_iters(),
        }
    }
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::Local { .. } => "local",
            Solver::Net { .. } => "net",
            Solver::Convex => "convex",
        }
    }
}

fn default_restarts() -> usize {
    4
}

fn default_iters() -> usize {
    30
}

fn default_probes() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSettings {
    /// Pairs per audit, each at distance at least `rho`.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self { pairs: default_pairs() }
    }
}

fn default_pairs() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerSettings {
    #[serde(default = "default_z")]
    pub z: Vec<f64>,
    #[serde(default = "default_dithers")]
    pub dithers: usize,
}

impl Default for QuantizerSettings {
    fn default() -> Self {
        Self {
            z: default_z(),
            dithers: default_dithers(),
        }
    }
}

fn default_z() -> Vec<f64> {
    vec![-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0]
}

fn default_dithers() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidthTableSettings {
    #[serde(default = "default_width_sets")]
    pub sets: Vec<SignalSetDescriptor>,
    #[serde(default = "default_width_mc")]
    pub n_mc: usize,
}

impl Default for WidthTableSettings {
    fn default() -> Self {
        Self {
            sets: default_width_sets(),
            n_mc: default_width_mc(),
        }
    }
}

fn default_width_sets() -> Vec<SignalSetDescriptor> {
    [(1, 16), (2, 64), (4, 256)]
        .into_iter()
        .map(|(s, n)| SignalSetDescriptor::sparse_ball(s, n, 1.0).expect("valid sparse ball"))
        .collect()
}

fn default_width_mc() -> usize {
    2000
}

fn default_trials() -> usize {
    1
}

fn default_rho() -> f64 {
    0.2
}

fn default_thetas() -> Vec<f64> {
    DEFAULT_THETAS.to_vec()
}

/// Declarative description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Accuracy target: success threshold of sweeps and minimum pair distance of audits.
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Dither amplitude. Defaults to `2(R + σ) + ρ` for sweeps and audits,
    /// 1 for the quantizer check and 2 for the Bernoulli demo.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub signal: Option<SignalSetDescriptor>,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub corruption: CorruptionStrategy,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    #[serde(default)]
    pub audit: AuditSettings,
    #[serde(default)]
    pub quantizer: QuantizerSettings,
    #[serde(default)]
    pub widths: WidthTableSettings,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn config_error(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    /// A config of `kind` with every other field at its default.
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            seed: 0,
            trials: default_trials(),
            rho: default_rho(),
            lambda: None,
            signal: None,
            grid: Grid::default(),
            solver: Solver::default(),
            corruption: CorruptionStrategy::default(),
            thetas: default_thetas(),
            audit: AuditSettings::default(),
            quantizer: QuantizerSettings::default(),
            widths: WidthTableSettings::default(),
            output: None,
        }
    }

    /// Parses TOML text. Unknown keys and invalid values are reported with
    /// the dotted path of the offending key.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_error("<document>", e.message()))?;
        check_descriptor_keys(&table)?;
        let config: ExperimentConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().message())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let in_module = |path: &str, r: Result<()>| r.map_err(|e| config_error(path, e.to_string()));
        if self.trials == 0 {
            return Err(config_error("trials", "must be at least 1"));
        }
        if !(self.rho > 0.0) {
            return Err(config_error("rho", "must be positive"));
        }
        if let Some(lambda) = self.lambda {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return Err(config_error("lambda", "must be positive"));
            }
        }
        for (name, empty) in [
            ("grid.laws", self.grid.laws.is_empty()),
            ("grid.m", self.grid.m.is_empty()),
            ("grid.noise", self.grid.noise.is_empty()),
            ("grid.beta", self.grid.beta.is_empty()),
        ] {
            if empty {
                return Err(config_error(name, "grid axes must be nonempty"));
            }
        }
        for (k, law) in self.grid.laws.iter().enumerate() {
            in_module(&format!("grid.laws[{k}]"), law.validate())?;
        }
        for (k, m) in self.grid.m.iter().enumerate() {
            if *m == 0 {
                return Err(config_error(&format!("grid.m[{k}]"), "must be positive"));
            }
        }
        for (k, noise) in self.grid.noise.iter().enumerate() {
            in_module(&format!("grid.noise[{k}]"), noise.validate())?;
        }
        for (k, beta) in self.grid.beta.iter().enumerate() {
            if !(0.0..=1.0).contains(beta) {
                return Err(config_error(&format!("grid.beta[{k}]"), "must lie in [0, 1]"));
            }
        }
        for (k, theta) in self.thetas.iter().enumerate() {
            if !(*theta >= 0.0) {
                return Err(config_error(&format!("thetas[{k}]"), "must be nonnegative"));
            }
        }
        if let Some(signal) = &self.signal {
            in_module("signal", signal.validate())?;
        }
        match self.kind {
            ExperimentKind::RecoverySweep => {
                let signal = self
                    .signal
                    .as_ref()
                    .ok_or_else(|| config_error("signal", "a recovery sweep needs a signal set"))?;
                match &self.solver {
                    Solver::Local { .. } if !matches!(signal.set, SignalSet::SparseBall { .. }) => {
                        return Err(config_error("solver.kind", "local search needs a sparse-ball signal set"));
                    }
                    Solver::Net { r, .. } if !(*r > 0.0) => {
                        return Err(config_error("solver.r", "must be positive"));
                    }
                    Solver::Convex if matches!(signal.set, SignalSet::FiniteSet { .. }) && signal.dim() > 3 => {
                        return Err(config_error("solver.kind", "the convex program over a finite set needs n <= 3"));
                    }
                    _ => {}
                }
            }
            ExperimentKind::TessellationAudit => {
                if self.signal.is_none() {
                    return Err(config_error("signal", "an audit needs a signal set"));
                }
                if self.audit.pairs == 0 {
                    return Err(config_error("audit.pairs", "must be positive"));
                }
            }
            ExperimentKind::QuantizerMeanCheck => {
                if self.quantizer.z.is_empty() {
                    return Err(config_error("quantizer.z", "must be nonempty"));
                }
                if self.quantizer.dithers < 2 {
                    return Err(config_error("quantizer.dithers", "need at least 2 dithers"));
                }
            }
            ExperimentKind::BernoulliFailureDemo => {}
            ExperimentKind::WidthTable => {
                if self.widths.sets.is_empty() {
                    return Err(config_error("widths.sets", "must be nonempty"));
                }
                if self.widths.n_mc < 2 {
                    return Err(config_error("widths.n_mc", "need at least 2 draws"));
                }
                for (k, set) in self.widths.sets.iter().enumerate() {
                    in_module(&format!("widths.sets[{k}]"), set.validate())?;
                }
            }
        }
        Ok(())
    }

    fn lambda_for(&self, noise: &NoiseModel) -> f64 {
        let radius = self.signal.as_ref().map_or(1.0, |s| s.radius);
        self.lambda
            .unwrap_or_else(|| default_lambda(radius, noise.sigma(), self.rho))
    }
}

/// Signal-set tables are flattened into their descriptor, which serde cannot
/// combine with `deny_unknown_fields`; their keys are checked here instead.
fn check_descriptor_keys(table: &toml::Table) -> Result<()> {
    fn check(path: &str, value: &toml::Value) -> Result<()> {
        let Some(t) = value.as_table() else {
            return Ok(());
        };
        let allowed: &[&str] = match t.get("kind").and_then(|k| k.as_str()) {
            Some("sparse_ball") | Some("l1l2_ball") => &["kind", "s", "n", "radius"],
            Some("finite_set") => &["kind", "points", "radius"],
            _ => return Ok(()),
        };
        match t.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(key) => Err(config_error(&format!("{path}.{key}"), format!("unknown field `{key}`"))),
            None => Ok(()),
        }
    }
    if let Some(signal) = table.get("signal") {
        check("signal", signal)?;
    }
    if let Some(sets) = table
        .get("widths")
        .and_then(|w| w.get("sets"))
        .and_then(|s| s.as_array())
    {
        for (k, set) in sets.iter().enumerate() {
            check(&format!("widths.sets[{k}]"), set)?;
        }
    }
    Ok(())
}

/// One row of a recovery sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub schema_version: u32,
    pub law: String,
    pub m: usize,
    pub beta: f64,
    pub sigma: f64,
    pub noise: String,
    pub solver: String,
    pub corruption: String,
    pub lambda: f64,
    pub rho: f64,
    pub trial: usize,
    /// Master seed of the trial's [`SeedPlan`].
    pub seed: u64,
    /// `‖x# - x‖₂`.
    pub error: f64,
    /// `d_H(q_corr, sign(A x# + τ))` as a count.
    pub hamming_objective: usize,
    pub flipped: usize,
    /// Wall-clock time of the trial. Kept out of the results CSV so that
    /// reruns are byte-identical; written to `timings.csv` instead.
    #[serde(skip)]
    pub elapsed_ms: f64,
}

const TRIAL_COLUMNS: [&str; 15] = [
    "schema_version",
    "law",
    "m",
    "beta",
    "sigma",
    "noise",
    "solver",
    "corruption",
    "lambda",
    "rho",
    "trial",
    "seed",
    "error",
    "hamming_objective",
    "flipped",
];

/// Fully specified recovery cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryCell {
    pub descriptor: SignalSetDescriptor,
    pub law: RowLaw,
    pub m: usize,
    pub noise: NoiseModel,
    pub beta: f64,
    pub corruption: CorruptionStrategy,
    pub lambda: f64,
    pub rho: f64,
    pub solver: Solver,
}

/// Runs one recovery trial: sample `x ∈ T`, measure, corrupt, recover.
pub fn recovery_trial(cell: &RecoveryCell, plan: &SeedPlan, trial: usize, net: Option<&Net>) -> Result<TrialResult> {
    let start = Instant::now();
    let n = cell.descriptor.dim();
    let x = sample_signal(&cell.descriptor, plan, 0)?;
    let ensemble = MeasurementEnsemble::new(cell.law, n, cell.m, cell.lambda)?;
    let a = sample_matrix(&ensemble, plan, 0)?;
    let dither = sample_dither(cell.m, cell.lambda, plan, 0)?;
    let noise = sample_noise(&cell.noise, cell.m, plan, 0)?;
    let obs = one_bit_measure(&a, &x, &dither, &noise)?;
    let obs = corrupt_bits(&obs, cell.beta, cell.corruption, plan, 0)?;

    let x_hat = match &cell.solver {
        Solver::Local { restarts, iters } => {
            let opts = LocalSearchOptions::new(*restarts, *iters, plan.child(1));
            hamming_recover_local_with(&a, &dither, &obs.q, &cell.descriptor, &opts)?.x_hat
        }
        Solver::Net { .. } => {
            let net = net.ok_or_else(|| Error::Precondition("net solver needs a prebuilt net".into()))?;
            hamming_recover_net(&a, &dither, &obs.q, net)?.x_hat
        }
        Solver::Convex => convex_recover(&a, &obs.q, cell.lambda, &cell.descriptor)?.x_hat,
    };
    let objective = hamming_objective(&a, &dither, &obs.q, &x_hat)?;
    Ok(TrialResult {
        schema_version: SCHEMA_VERSION,
        law: cell.law.name(),
        m: cell.m,
        beta: cell.beta,
        sigma: cell.noise.sigma(),
        noise: cell.noise.name(),
        solver: cell.solver.name().to_string(),
        corruption: cell.corruption.name().to_string(),
        lambda: cell.lambda,
        rho: cell.rho,
        trial,
        seed: plan.master_seed,
        error: dist2(&x_hat, &x),
        hamming_objective: objective,
        flipped: obs.flipped(),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// The cells of a recovery sweep in grid order.
pub fn recovery_cells(config: &ExperimentConfig) -> Result<Vec<RecoveryCell>> {
    let descriptor = config
        .signal
        .clone()
        .ok_or_else(|| config_error("signal", "a recovery sweep needs a signal set"))?;
    let mut cells = Vec::new();
    for law in &config.grid.laws {
        for &m in &config.grid.m {
            for noise in &config.grid.noise {
                for &beta in &config.grid.beta {
                    cells.push(RecoveryCell {
                        descriptor: descriptor.clone(),
                        law: *law,
                        m,
                        noise: *noise,
                        beta,
                        corruption: config.corruption,
                        lambda: config.lambda_for(noise),
                        rho: config.rho,
                        solver: config.solver.clone(),
                    });
                }
            }
        }
    }
    Ok(cells)
}

/// All rows of a recovery sweep in `(cell, trial)` order, computed on the
/// current rayon pool.
pub fn recovery_sweep(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    let cells = recovery_cells(config)?;
    let master = SeedPlan::new(config.seed);
    let net = match &config.solver {
        Solver::Net { r, probes } => Some(build_net(
            config.signal.as_ref().expect("checked by recovery_cells"),
            *r,
            *probes,
            &master.child(u64::MAX),
        )?),
        _ => None,
    };
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    jobs.par_iter()
        .map(|&(c, t)| recovery_trial(&cells[c], &master.child(t as u64), t, net.as_ref()))
        .collect()
}

/// One tessellation audit: pairs of points of `T` at distance at least `ρ`.
pub fn audit_cell(config: &ExperimentConfig, law: RowLaw, m: usize, trial: usize) -> Result<TessellationReport> {
    let descriptor = config
        .signal
        .as_ref()
        .ok_or_else(|| config_error("signal", "an audit needs a signal set"))?;
    let plan = SeedPlan::new(config.seed).child(trial as u64);
    let lambda = config.lambda_for(&NoiseModel::None);
    let ensemble = MeasurementEnsemble::new(law, descriptor.dim(), m, lambda)?;
    let a = sample_matrix(&ensemble, &plan, 0)?;
    let dither = sample_dither(m, lambda, &plan, 0)?;
    let pair_plan = plan.child(2);
    let max_draws = 1000 * config.audit.pairs as u64;
    let mut pairs = Vec::with_capacity(config.audit.pairs);
    let mut k = 0u64;
    while pairs.len() < config.audit.pairs {
        if k >= max_draws {
            return Err(Error::Precondition(format!(
                "found only {} of {} pairs at distance >= {} after {max_draws} draws",
                pairs.len(),
                config.audit.pairs,
                config.rho
            )));
        }
        let x = sample_signal(descriptor, &pair_plan, 2 * k)?;
        let y = sample_signal(descriptor, &pair_plan, 2 * k + 1)?;
        if dist2(&x, &y) >= config.rho {
            pairs.push((x, y));
        }
        k += 1;
    }
    tessellation_audit(&a, &dither, &pairs, config.rho, &config.thetas, lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerMeanRow {
    pub z: f64,
    pub lambda: f64,
    pub dithers: usize,
    pub trial: usize,
    pub empirical: f64,
    pub formula: f64,
    pub abs_error: f64,
    pub standard_error: f64,
}

/// Monte Carlo means of `sign(z + τ)` against `quantizer_mean`.
pub fn quantizer_mean_rows(config: &ExperimentConfig) -> Result<Vec<QuantizerMeanRow>> {
    let lambda = config.lambda.unwrap_or(1.0);
    let master = SeedPlan::new(config.seed);
    let jobs: Vec<(usize, usize)> = (0..config.trials)
        .flat_map(|t| (0..config.quantizer.z.len()).map(move |k| (t, k)))
        .collect();
    jobs.par_iter()
        .map(|&(t, k)| {
            let z = config.quantizer.z[k];
            let (empirical, se) =
                empirical_quantizer_mean(z, lambda, config.quantizer.dithers, &master.child(t as u64), k as u64)?;
            let formula = quantizer_mean(z, lambda);
            Ok(QuantizerMeanRow {
                z,
                lambda,
                dithers: config.quantizer.dithers,
                trial: t,
                empirical,
                formula,
                abs_error: (empirical - formula).abs(),
                standard_error: se,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliRow {
    /// `undithered` (all sign vectors, no dither) or `dithered`.
    pub setting: String,
    pub m: usize,
    pub lambda: f64,
    pub trial: usize,
    pub distance: f64,
    pub hamming_fraction: f64,
}

/// The Bernoulli blind pair under every undithered sign hyperplane, then
/// under dithered Rademacher rows for each `m` of the grid.
pub fn bernoulli_rows(config: &ExperimentConfig) -> Result<Vec<BernoulliRow>> {
    let (x, y) = bernoulli_blind_pair();
    let distance = dist2(&x, &y);
    let all = all_sign_vectors(2)?;
    let mut rows = vec![BernoulliRow {
        setting: "undithered".into(),
        m: all.rows(),
        lambda: 0.0,
        trial: 0,
        distance,
        hamming_fraction: hamming_fraction(&all, &vec![0.0; all.rows()], &x, &y)?,
    }];
    let lambda = config.lambda.unwrap_or(2.0);
    let master = SeedPlan::new(config.seed);
    let jobs: Vec<(usize, usize)> = config
        .grid
        .m
        .iter()
        .flat_map(|&m| (0..config.trials).map(move |t| (m, t)))
        .collect();
    let dithered = jobs
        .par_iter()
        .map(|&(m, t)| {
            let plan = master.child(t as u64);
            let ensemble = MeasurementEnsemble::new(RowLaw::Rademacher, 2, m, lambda)?;
            let a = sample_matrix(&ensemble, &plan, 0)?;
            let dither = sample_dither(m, lambda, &plan, 0)?;
            Ok(BernoulliRow {
                setting: "dithered".into(),
                m,
                lambda,
                trial: t,
                distance,
                hamming_fraction: hamming_fraction(&a, &dither, &x, &y)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.extend(dithered);
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub set: String,
    pub n: usize,
    pub radius: f64,
    pub width: f64,
    pub standard_error: f64,
    pub n_mc: usize,
    /// `R·√(s log(en/s))` for sparse balls.
    pub reference: Option<f64>,
    pub ratio: Option<f64>,
}

/// Short human-readable label of a signal set.
pub fn describe(d: &SignalSetDescriptor) -> String {
    match &d.set {
        SignalSet::SparseBall { s, n } => format!("sparse_ball(s={s},n={n},R={})", d.radius),
        SignalSet::L1L2Ball { s, n } => format!("l1l2_ball(s={s},n={n},R={})", d.radius),
        SignalSet::FiniteSet { points } => format!("finite_set(k={},n={},R={})", points.len(), d.dim(), d.radius),
    }
}

/// `√(s log(en/s))`, the order of the Gaussian width of the unit sparse ball.
pub fn sparse_width_reference(s: usize, n: usize) -> f64 {
    let (s, n) = (s as f64, n as f64);
    (s * (std::f64::consts::E * n / s).ln()).sqrt()
}

/// Gaussian mean widths of a list of sets.
pub fn width_rows(sets: &[SignalSetDescriptor], n_mc: usize, seed: u64) -> Result<Vec<WidthRow>> {
    let master = SeedPlan::new(seed);
    sets.iter()
        .enumerate()
        .map(|(k, d)| {
            let w = gaussian_mean_width(d, n_mc, &master.child(k as u64))?;
            let reference = match d.set {
                SignalSet::SparseBall { s, n } => Some(d.radius * sparse_width_reference(s, n)),
                _ => None,
            };
            Ok(WidthRow {
                set: describe(d),
                n: d.dim(),
                radius: d.radius,
                width: w.value,
                standard_error: w.standard_error,
                n_mc: w.n_mc,
                reference,
                ratio: reference.map(|r| w.value / r),
            })
        })
        .collect()
}

/// Output-directory and worker-count overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunOptions {
    /// Reads [`OUTPUT_DIR_ENV`] and [`WORKERS_ENV`].
    pub fn from_env() -> Result<Self> {
        let output_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
        let workers = match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(
                v.parse::<usize>()
                    .ok()
                    .filter(|w| *w > 0)
                    .ok_or_else(|| config_error(WORKERS_ENV, format!("expected a positive integer, got `{v}`")))?,
            ),
            Err(_) => None,
        };
        Ok(Self { output_dir, workers })
    }
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub dir: PathBuf,
    /// Deterministic result files, in write order.
    pub results: Vec<PathBuf>,
    pub manifest: PathBuf,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    library: &'static str,
    version: &'static str,
    master_seed: u64,
    schema_version: u32,
    created_unix_seconds: u64,
    workers: usize,
    results: Vec<String>,
    timings: Option<String>,
    config: &'a ExperimentConfig,
}

/// Runs `config` on a dedicated worker pool and writes its result files and
/// a `manifest.json` into the output directory.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<RunOutput> {
    config.validate()?;
    let dir = options
        .output_dir
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = options.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| config_error(WORKERS_ENV, e.to_string()))?;
    let workers = pool.current_num_threads();

    let mut results = Vec::new();
    let mut timings = None;
    pool.install(|| -> Result<()> {
        match config.kind {
            ExperimentKind::RecoverySweep => {
                let rows = recovery_sweep(config)?;
                results.push(write_trial_results(&dir.join("results.csv"), &rows)?);
                timings = Some(write_timings(&dir.join("timings.csv"), &rows)?);
            }
            ExperimentKind::TessellationAudit => {
                results.extend(write_audits(config, &dir)?);
            }
            ExperimentKind::QuantizerMeanCheck => {
                results.push(write_rows(&dir.join("quantizer_mean.csv"), &quantizer_mean_rows(config)?)?);
            }
            ExperimentKind::BernoulliFailureDemo => {
                results.push(write_rows(&dir.join("bernoulli.csv"), &bernoulli_rows(config)?)?);
            }
            ExperimentKind::WidthTable => {
                let rows = width_rows(&config.widths.sets, config.widths.n_mc, config.seed)?;
                results.push(write_rows(&dir.join("widths.csv"), &rows)?);
            }
        }
        Ok(())
    })?;

    let name = |p: &PathBuf| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let manifest = Manifest {
        library: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        master_seed: config.seed,
        schema_version: SCHEMA_VERSION,
        created_unix_seconds: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        workers,
        results: results.iter().map(name).collect(),
        timings: timings.as_ref().map(name),
        config,
    };
    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    log::info!("wrote {} result file(s) to {}", results.len(), dir.display());
    Ok(RunOutput {
        dir,
        results,
        manifest: manifest_path,
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<PathBuf> {
    let mut wtr = csv::Writer::from_path(path)?;
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Writes recovery rows with the versioned [`TrialResult`] header.
pub fn write_trial_results(path: &Path, rows: &[TrialResult]) -> Result<PathBuf> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    wtr.write_record(TRIAL_COLUMNS)?;
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn write_timings(path: &Path, rows: &[TrialResult]) -> Result<PathBuf> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["law", "m", "beta", "sigma", "solver", "trial", "elapsed_ms"])?;
    for r in rows {
        wtr.write_record([
            r.law.clone(),
            r.m.to_string(),
            r.beta.to_string(),
            r.sigma.to_string(),
            r.solver.clone(),
            r.trial.to_string(),
            format!("{:.3}", r.elapsed_ms),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn write_audits(config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let jobs: Vec<(RowLaw, usize, usize)> = config
        .grid
        .laws
        .iter()
        .flat_map(|&law| {
            config
                .grid
                .m
                .iter()
                .flat_map(move |&m| (0..config.trials).map(move |t| (law, m, t)))
        })
        .collect();
    let reports = jobs
        .par_iter()
        .map(|&(law, m, t)| audit_cell(config, law, m, t))
        .collect::<Result<Vec<_>>>()?;

    let pairs_path = dir.join("audit_pairs.csv");
    let mut pairs = csv::Writer::from_path(&pairs_path)?;
    let mut header = vec!["law".to_string(), "m".into(), "trial".into(), "pair_id".into(), "distance".into(), "hamming_fraction".into()];
    header.extend((0..config.thetas.len()).map(|k| format!("margin_count_theta_{k}")));
    pairs.write_record(&header)?;
    let summary_path = dir.join("audit_summary.csv");
    let mut summary = csv::Writer::from_path(&summary_path)?;
    summary.write_record(["law", "m", "trial", "lambda", "eligible", "min_ratio", "max_ratio", "rank_correlation"])?;
    for ((law, m, t), report) in jobs.iter().zip(&reports) {
        for p in &report.pairs {
            let mut row = vec![law.name(), m.to_string(), t.to_string(), p.pair_id.to_string(), p.distance.to_string(), p.hamming_fraction.to_string()];
            row.extend(p.margin_counts.iter().map(|c| c.to_string()));
            pairs.write_record(&row)?;
        }
        let mut row = vec![law.name(), m.to_string(), t.to_string(), report.lambda.to_string()];
        match &report.summary {
            Some(s) => row.extend([
                s.eligible.to_string(),
                s.min_ratio.to_string(),
                s.max_ratio.to_string(),
                s.rank_correlation.to_string(),
            ]),
            None => row.extend(["0".to_string(), String::new(), String::new(), String::new()]),
        }
        summary.write_record(&row)?;
    }
    pairs.flush().map_err(|e| Error::io(&pairs_path, e))?;
    summary.flush().map_err(|e| Error::io(&summary_path, e))?;
    Ok(vec![pairs_path, summary_path])
}

/// Reads recovery rows, rejecting files with another column set or schema version.
pub fn read_trial_results(path: &Path) -> Result<Vec<TrialResult>> {
    let schema = |reason: String| Error::Schema {
        file: path.to_path_buf(),
        reason,
    };
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != TRIAL_COLUMNS {
        return Err(schema(format!("expected columns {}, found {}", TRIAL_COLUMNS.join(","), header.join(","))));
    }
    let mut rows = Vec::new();
    for (k, record) in rdr.deserialize::<TrialResult>().enumerate() {
        let row = record.map_err(|e| schema(format!("row {}: {e}", k + 1)))?;
        if row.schema_version != SCHEMA_VERSION {
            return Err(schema(format!(
                "row {}: unknown schema version {} (this build reads version {SCHEMA_VERSION})",
                k + 1,
                row.schema_version
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Keys a summary may group by.
pub const GROUP_KEYS: [&str; 9] = ["law", "m", "beta", "sigma", "noise", "solver", "corruption", "lambda", "rho"];
/// Grouping used when none is given.
pub const DEFAULT_GROUP_BY: [&str; 5] = ["law", "m", "beta", "sigma", "solver"];

fn key_value(row: &TrialResult, key: &str) -> Result<String> {
    Ok(match key {
        "law" => row.law.clone(),
        "m" => row.m.to_string(),
        "beta" => row.beta.to_string(),
        "sigma" => row.sigma.to_string(),
        "noise" => row.noise.clone(),
        "solver" => row.solver.clone(),
        "corruption" => row.corruption.clone(),
        "lambda" => row.lambda.to_string(),
        "rho" => row.rho.to_string(),
        other => {
            return Err(Error::param(
                "group_by",
                format!("unknown key `{other}`; expected one of {}", GROUP_KEYS.join(", ")),
            ))
        }
    })
}

/// Aggregates of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// Values of the group-by keys, in order.
    pub keys: Vec<String>,
    pub trials: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Fraction of trials with error at most `rho`.
    pub success_rate: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SummaryTable {
    pub group_by: Vec<String>,
    pub rows: Vec<SummaryRow>,
    /// Cells that were omitted, with the reason.
    pub warnings: Vec<String>,
}

impl SummaryTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Value of `key` in `row`, if the table is grouped by it.
    pub fn key<'a>(&self, row: &'a SummaryRow, key: &str) -> Option<&'a str> {
        self.group_by.iter().position(|k| k == key).map(|i| row.keys[i].as_str())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        let mut header = self.group_by.clone();
        header.extend(["trials", "median", "q1", "q3", "success_rate", "rho"].map(String::from));
        wtr.write_record(&header)?;
        for r in &self.rows {
            let mut row = r.keys.clone();
            row.extend([
                r.trials.to_string(),
                r.median.to_string(),
                r.q1.to_string(),
                r.q3.to_string(),
                r.success_rate.to_string(),
                r.rho.to_string(),
            ]);
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let schema = |reason: String| Error::Schema {
            file: path.to_path_buf(),
            reason,
        };
        let mut rdr = csv::Reader::from_path(path)?;
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let stats = ["trials", "median", "q1", "q3", "success_rate", "rho"];
        if header.len() < stats.len() || header[header.len() - stats.len()..] != stats {
            return Err(schema(format!("not a summary table; trailing columns must be {}", stats.join(","))));
        }
        let k = header.len() - stats.len();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let num = |i: usize| -> Result<f64> {
                record[i]
                    .parse::<f64>()
                    .map_err(|e| schema(format!("column `{}`: {e}", header[i])))
            };
            rows.push(SummaryRow {
                keys: (0..k).map(|i| record[i].to_string()).collect(),
                trials: num(k)? as usize,
                median: num(k + 1)?,
                q1: num(k + 2)?,
                q3: num(k + 3)?,
                success_rate: num(k + 4)?,
                rho: num(k + 5)?,
            });
        }
        Ok(Self {
            group_by: header[..k].to_vec(),
            rows,
            warnings: Vec::new(),
        })
    }
}

/// Summarizes the recovery CSV at `path`; see [`summarize_rows`].
pub fn summarize(path: &Path, group_by: &[String], rho: Option<f64>) -> Result<SummaryTable> {
    summarize_rows(&read_trial_results(path)?, group_by, rho)
}

/// Per-cell median, quartiles and success rate `P(error <= ρ)`. `ρ` defaults
/// to the value recorded in the rows. Cells with no finite error are omitted
/// with a warning rather than reported as zero.
pub fn summarize_rows(rows: &[TrialResult], group_by: &[String], rho: Option<f64>) -> Result<SummaryTable> {
    let group_by: Vec<String> = if group_by.is_empty() {
        DEFAULT_GROUP_BY.iter().map(|s| s.to_string()).collect()
    } else {
        group_by.to_vec()
    };
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut cells: BTreeMap<Vec<String>, Vec<&TrialResult>> = BTreeMap::new();
    for row in rows {
        let key = group_by
            .iter()
            .map(|k| key_value(row, k))
            .collect::<Result<Vec<_>>>()?;
        let entry = cells.entry(key.clone()).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(row);
    }
    let mut table = SummaryTable {
        group_by,
        ..SummaryTable::default()
    };
    for key in order {
        let members = &cells[&key];
        let errors: Vec<f64> = members.iter().map(|r| r.error).filter(|e| e.is_finite()).collect();
        if errors.is_empty() {
            let warning = format!("cell {} has no finite errors; omitted", key.join("/"));
            log::warn!("{warning}");
            table.warnings.push(warning);
            continue;
        }
        let threshold = rho.unwrap_or(members[0].rho);
        let successes = errors.iter().filter(|e| **e <= threshold).count();
        table.rows.push(SummaryRow {
            keys: key,
            trials: errors.len(),
            median: median(&errors),
            q1: quantile(&errors, 0.25),
            q3: quantile(&errors, 0.75),
            success_rate: successes as f64 / errors.len() as f64,
            rho: threshold,
        });
    }
    Ok(table)
}

/// Plot layouts understood by [`emit_plots`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Median error with quartile bars against `m`, one curve per law.
    ErrorVsM,
    /// Success rate against `m`, one curve per law.
    SuccessVsM,
    /// Median error with quartile bars against `beta`, one curve per law.
    ErrorVsBeta,
}

impl PlotKind {
    fn x_key(self) -> &'static str {
        match self {
            PlotKind::ErrorVsM | PlotKind::SuccessVsM => "m",
            PlotKind::ErrorVsBeta => "beta",
        }
    }

    fn stem(self) -> &'static str {
        match self {
            PlotKind::ErrorVsM => "error_vs_m",
            PlotKind::SuccessVsM => "success_vs_m",
            PlotKind::ErrorVsBeta => "error_vs_beta",
        }
    }
}

impl std::str::FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "error-vs-m" => PlotKind::ErrorVsM,
            "success-vs-m" => PlotKind::SuccessVsM,
            "error-vs-beta" => PlotKind::ErrorVsBeta,
            other => {
                return Err(Error::param(
                    "kind",
                    format!("unsupported plot kind `{other}`; expected error-vs-m, success-vs-m or error-vs-beta"),
                ))
            }
        })
    }
}

/// Writes `<stem>.gp` and `<stem>.dat` into `dir` and returns both paths.
/// The data file holds one gnuplot index block per law.
pub fn emit_plots(summary: &SummaryTable, kind: PlotKind, dir: &Path) -> Result<Vec<PathBuf>> {
    if summary.is_empty() {
        return Err(Error::NothingToPlot("nothing to plot: the summary has no rows".into()));
    }
    let x_key = kind.x_key();
    if !summary.group_by.iter().any(|k| k == x_key) {
        return Err(Error::param(
            "kind",
            format!("unsupported kind for this summary: it is not grouped by `{x_key}`"),
        ));
    }
    let mut curves: Vec<(String, Vec<&SummaryRow>)> = Vec::new();
    for row in &summary.rows {
        let law = summary.key(row, "law").unwrap_or("all").to_string();
        match curves.iter_mut().find(|(l, _)| *l == law) {
            Some((_, rows)) => rows.push(row),
            None => curves.push((law, vec![row])),
        }
    }

    let mut data = String::new();
    for (k, (law, rows)) in curves.iter_mut().enumerate() {
        if k > 0 {
            data.push_str("\n\n");
        }
        let x = |r: &SummaryRow| summary.key(r, x_key).and_then(|v| v.parse::<f64>().ok()).unwrap_or(f64::NAN);
        rows.sort_by(|a, b| x(a).total_cmp(&x(b)));
        data.push_str(&format!("# {law}\n# {x_key} median q1 q3 success_rate\n"));
        for r in rows.iter() {
            data.push_str(&format!("{} {} {} {} {}\n", x(r), r.median, r.q1, r.q3, r.success_rate));
        }
    }

    let stem = kind.stem();
    let data_path = dir.join(format!("{stem}.dat"));
    let script_path = dir.join(format!("{stem}.gp"));
    let (ylabel, using, style) = match kind {
        PlotKind::SuccessVsM => ("success rate", "1:5", "linespoints"),
        _ => ("median error", "1:2:3:4", "yerrorlines"),
    };
    let mut script = String::new();
    script.push_str(&format!("set terminal pngcairo size 800,600\nset output '{stem}.png'\n"));
    script.push_str(&format!("set xlabel '{x_key}'\nset ylabel '{ylabel}'\nset key top right\n"));
    if x_key == "m" {
        script.push_str("set logscale x 2\n");
    }
    let plots: Vec<String> = curves
        .iter()
        .enumerate()
        .map(|(k, (law, _))| {
            let file = if k == 0 { format!("'{stem}.dat'") } else { "''".into() };
            format!("{file} index {k} using {using} with {style} title '{law}'")
        })
        .collect();
    script.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));

    fs::write(&data_path, data).map_err(|e| Error::io(&data_path, e))?;
    let mut f = fs::File::create(&script_path).map_err(|e| Error::io(&script_path, e))?;
    f.write_all(script.as_bytes()).map_err(|e| Error::io(&script_path, e))?;
    Ok(vec![script_path, data_path])
}
