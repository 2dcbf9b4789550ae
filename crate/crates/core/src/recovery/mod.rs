//! Signal reconstruction from (possibly corrupted) one-bit measurements.

mod convex;
mod hamming;
mod net;
mod projection;

use serde::{Deserialize, Serialize};

pub use convex::{backprojection, convex_recover, objective as convex_objective, project_convex_hull, project_hull};
pub use hamming::{
    hamming_objective, hamming_recover_local, hamming_recover_local_with, hamming_recover_net, warm_start,
    LocalSearchOptions,
};
pub use net::{build_net, build_net_with_budget, probe_radius, Net, DEFAULT_NET_BUDGET};
pub use projection::{dykstra, l1_threshold, project_intersection, project_l1, project_l2, soft_threshold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolverMeta {
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
}

/// Output of a recovery program: the estimate `x#` and the attained objective
/// (a Hamming count for the Hamming programs, `φ(x#)` for the convex one).
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    pub objective: f64,
    pub meta: SolverMeta,
}
