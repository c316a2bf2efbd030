//! Posterior sampling over the estimated rates with data augmentation of the
//! unobserved isolation counts.

mod engine;
pub mod latent;
pub mod prior;
pub mod sampler;
pub mod summary;

use thiserror::Error;

use crate::likelihood::LikelihoodError;
use crate::model::ModelError;

pub use latent::{initial_latents, update_latent_removals};
pub use prior::{log_prior, GammaPrior, PriorSpec};
pub use sampler::{
    chain_seed, log_posterior, rwmh_sample, rwmh_sample_chains, rwmh_sample_with, Chain, Draw, DrawSink,
    McmcConfig,
};
pub use summary::{potential_scale_reduction, summarize_chain, ParamSummary, PosteriorSummary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("no latent removals make month {month} feasible")]
    NoFeasibleLatents { month: usize },
    #[error("invalid gamma prior (shape {shape}, rate {rate})")]
    InvalidPrior { shape: f64, rate: f64 },
    #[error("unknown prior preset {0}")]
    UnknownPriorPreset(u8),
    #[error("chain has no retained draws")]
    EmptyChain,
    #[error("invalid sampler config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Likelihood(#[from] LikelihoodError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
