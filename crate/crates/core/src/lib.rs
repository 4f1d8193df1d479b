//! A desk-scale laboratory for out-of-distribution generalization through
//! causal invariant transformations.
//!
//! The crate is organised bottom-up:
//!
//! * [`scm_toy`] samples the 2×2 matrix structural model whose outcome is
//!   `|det X| + η`, with a tunable spurious link between `η` and the
//!   direction of the matrix columns.
//! * [`cit`] holds the causal feature and the transformations that leave it
//!   unchanged.
//! * [`finite_oracle`] checks the invariance lemmas and theorems by brute
//!   force on finite input spaces, in exact rational arithmetic.
//! * [`model`], [`optim`] and [`objectives`] implement the polynomial ReLU
//!   predictor, its optimizers, and the four training objectives including
//!   the RICE regulariser.
//! * [`experiments`] runs the out-of-distribution sweep and the spurious
//!   colour analog and writes CSV results.
//!
//! The numeric core is generic over [`Real`] (`f32`/`f64`); the oracle is
//! generic over [`OracleScalar`] and is normally run on [`Exact`] rationals.
//! Concrete aliases for the common instantiations live at the crate root.

pub mod cit;
pub mod error;
pub mod experiments;
pub mod finite_oracle;
pub mod model;
pub mod objectives;
pub mod optim;
pub mod rng;
pub mod scalar;
pub mod scm_toy;

pub use error::{Error, Result};
pub use scalar::{Exact, OracleScalar, Real};

/// Version string recorded in run manifests.
pub const VERSION: &str = concat!("rice-lab v", env!("CARGO_PKG_VERSION"));

/// Double precision matrix; the default for experiments.
pub type Matrix2f = scm_toy::Matrix2<f64>;
/// Single precision matrix.
pub type Matrix2f32 = scm_toy::Matrix2<f32>;
pub type ToySamplef = scm_toy::ToySample<f64>;
pub type ToyDatasetf = scm_toy::ToyDataset<f64>;
pub type Transformf = cit::Transform<f64>;
pub type TransformChainf = cit::TransformChain<f64>;
pub type ModelParamsf = model::ModelParams<f64>;
pub type TrainConfigf = objectives::TrainConfig<f64>;
/// Finite instance with exact rational probabilities.
pub type ExactInstance = finite_oracle::FiniteInstance<Exact>;
/// Finite instance with floating-point probabilities (tie tolerance applies).
pub type FloatInstance = finite_oracle::FiniteInstance<f64>;
pub type SweepConfigf = experiments::SweepConfig<f64>;
pub type ResultRowf = experiments::ResultRow<f64>;
