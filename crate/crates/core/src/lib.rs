//! Greedy (two-way Q-DEIM) sample selection on space-time snapshot matrices
//! and PDE coefficient estimation with a sine-activated network.
//!
//! The pipeline: a [`snapshot::SnapshotMatrix`] is split into time windows,
//! each window is sampled with pivoted QR on its truncated singular vectors
//! ([`sampler`]), a [`siren::SirenNet`] is fitted to the samples while the
//! coefficients of a known feature library are recovered by least squares at
//! every iteration ([`trainer`]). [`harness`] runs the parameter sweeps,
//! random baselines and k-means summaries.

pub mod error;
pub mod estimator;
pub mod generate;
pub mod harness;
pub mod linalg;
pub mod sampler;
pub mod siren;
pub mod snapshot;
pub mod trainer;

pub use error::{Error, Result};
