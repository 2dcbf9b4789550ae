//! Dithered one-bit measurements of structured signals.
//!
//! The crate samples measurement ensembles (`q = sign(Ax + ν + τ)` with a
//! uniform dither `τ`), audits the random hyperplane tessellation they induce,
//! estimates the geometric complexity of signal sets and recovers signals from
//! corrupted bits with a Hamming-distance program or a convex program.
//! [`harness`] drives config-based Monte Carlo experiments on top of these.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complexity;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod quantize;
pub mod recovery;
pub mod seed;
pub mod signal;
pub mod stats;
pub mod tessellation;

pub use ensemble::{MeasurementEnsemble, NoiseModel, RowLaw};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use quantize::{CorruptionStrategy, QuantizedObservation, Sign};
pub use seed::{SeedPlan, Stream};
pub use signal::{SignalSet, SignalSetDescriptor};
