//! Simulation and Monte-Carlo verification of central limit theorems for
//! moving partial sums S'_n = X_{p(n)+1} + ... + X_{p(n)+n} of independent
//! and associated sequences.
//!
//! * [`model`] sequence laws, exact covariances, association certificates
//! * [`path`] reproducible sample paths
//! * [`sums`] moving sums, block schemes, window variances
//! * [`conditions`] Lyapounov, Lindeberg, UAN and block hypotheses
//! * [`weakconv`] Monte-Carlo checks of the Gaussian and finite-dimensional limits
//! * [`ruin`] surplus process demo
//! * [`cli`] command-line driver

pub mod cli;
pub mod conditions;
pub mod error;
pub mod law;
pub mod model;
pub mod path;
pub mod rng;
pub mod ruin;
pub mod scalar;
pub mod sums;
pub mod weakconv;

pub use error::{Error, Result};
pub use law::{Estimate, Law, Tail};
pub use model::{Certificate, CovarianceRule, Family, IndexRange, NamedModel, SequenceModel, VarianceRule};
pub use path::{gen_path, PathSampler, SamplePath};
pub use scalar::Real;
pub use sums::{
    block_increments, make_block_scheme, moving_sum, window_variance, BlockIncrements, BlockRule, BlockScheme,
    VarianceEstimate, VarianceMode, Window,
};

pub use weakconv::{CharFunctionEstimate, ReplicateEnsemble};

pub type SamplePath64 = SamplePath<f64>;
pub type SamplePath32 = SamplePath<f32>;
pub type BlockIncrements64 = BlockIncrements<f64>;
pub type BlockIncrements32 = BlockIncrements<f32>;
pub type ReplicateEnsemble64 = ReplicateEnsemble<f64>;
pub type ReplicateEnsemble32 = ReplicateEnsemble<f32>;
