//! Chain-binomial model of hospital MRSA transmission with healthcare- and
//! community-associated colonized and infected compartments.
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the command
//! line live in the `mrsa` crate.

#![no_std]

extern crate alloc;

pub mod inference;
pub mod likelihood;
pub mod model;
pub mod selection;
pub mod simulate;
pub mod stats;

pub use inference::{rwmh_sample, Chain, InferenceError, McmcConfig, PriorSpec};
pub use likelihood::{log_likelihood, pointwise_log_likelihood, LatentRemovals, ObservedDataset, PointwiseLogLik};
pub use model::{CompartmentState, FixedRates, ModelMask, ModelParams, Param};
pub use selection::{waic, WaicResult};
pub use simulate::{simulate_trajectory, SimulationConfig};
