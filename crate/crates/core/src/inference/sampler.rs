//! Componentwise random-walk Metropolis–Hastings over the estimated rates,
//! interleaved with sweeps over the latent isolation counts.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::engine::LikelihoodState;
use super::latent::{initial_latents, sweep};
use super::prior::{log_prior, PriorSpec};
use super::InferenceError;
use crate::likelihood::{log_likelihood, LatentRemovals, LikelihoodError, ObservedDataset};
use crate::model::{FixedRates, ModelMask, ModelParams, Param};
use crate::simulate::stream_rng;

pub const DEFAULT_N_ITER: usize = 60_000;
pub const DEFAULT_N_BURNIN: usize = 10_000;
pub const DEFAULT_TARGET_ACCEPTANCE: f64 = 0.44;
const ADAPT_BATCH: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    pub n_iter: usize,
    pub n_burnin: usize,
    /// Starting values; `None` starts every active parameter at its prior mean.
    pub initial_params: Option<ModelParams>,
    /// Standard deviations of the log-scale proposals, in declared order.
    pub proposal_scales: [f64; 6],
    pub adapt: bool,
    pub target_acceptance: f64,
    pub n_chains: usize,
    pub seed: u64,
    /// Keep the latent removals of every `latent_thin`-th retained draw; 0 keeps none.
    pub latent_thin: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_iter: DEFAULT_N_ITER,
            n_burnin: DEFAULT_N_BURNIN,
            initial_params: None,
            proposal_scales: [0.5; 6],
            adapt: true,
            target_acceptance: DEFAULT_TARGET_ACCEPTANCE,
            n_chains: 1,
            seed: 1,
            latent_thin: 10,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<(), InferenceError> {
        if self.n_burnin >= self.n_iter {
            return Err(InferenceError::InvalidConfig("n_burnin must be smaller than n_iter"));
        }
        if self.proposal_scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(InferenceError::InvalidConfig("proposal scales must be finite and non-negative"));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(InferenceError::InvalidConfig("target acceptance must lie in (0, 1)"));
        }
        if self.n_chains == 0 {
            return Err(InferenceError::InvalidConfig("n_chains must be at least 1"));
        }
        Ok(())
    }
}

/// One retained iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub params: ModelParams,
    pub log_lik: f64,
    pub log_post: f64,
}

/// Retained draws of one chain plus its sampling diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub draws: Vec<Draw>,
    /// `(draw index, latent removals)` for the thinned subset.
    pub latents: Vec<(usize, LatentRemovals)>,
    /// Post burn-in acceptance per parameter; `None` for masked parameters.
    pub acceptance: [Option<f64>; 6],
    pub latent_acceptance: f64,
    pub proposal_scales: [f64; 6],
    pub mask: ModelMask,
    pub seed: u64,
    pub months: usize,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn params(&self) -> Vec<ModelParams> {
        self.draws.iter().map(|d| d.params).collect()
    }

    pub fn series(&self, p: Param) -> Vec<f64> {
        self.draws.iter().map(|d| d.params.get(p)).collect()
    }

    /// Concatenates chains run on the same data and model.
    pub fn merge(chains: &[Chain]) -> Option<Chain> {
        let first = chains.first()?;
        let mut out = first.clone();
        let total: usize = chains.iter().map(Chain::len).sum::<usize>().max(1);
        for c in &chains[1..] {
            let offset = out.draws.len();
            out.draws.extend_from_slice(&c.draws);
            out.latents.extend(c.latents.iter().map(|(i, l)| (i + offset, l.clone())));
        }
        for p in Param::ALL {
            out.acceptance[p.index()] = first.acceptance[p.index()].map(|_| {
                chains
                    .iter()
                    .map(|c| c.acceptance[p.index()].unwrap_or(0.0) * c.len() as f64)
                    .sum::<f64>()
                    / total as f64
            });
        }
        out.latent_acceptance =
            chains.iter().map(|c| c.latent_acceptance * c.len() as f64).sum::<f64>() / total as f64;
        Some(out)
    }
}

/// Receives the pointwise log-likelihood (row-major, `months * 6`) of every
/// retained draw.
pub trait DrawSink {
    fn record(&mut self, draw_index: usize, params: &ModelParams, pointwise: &[f64]);
}

impl DrawSink for () {
    fn record(&mut self, _: usize, _: &ModelParams, _: &[f64]) {}
}

/// Unnormalised log posterior: log-likelihood plus log prior.
pub fn log_posterior(
    data: &ObservedDataset,
    latents: &LatentRemovals,
    params: &ModelParams,
    fixed: &FixedRates,
    mask: ModelMask,
    prior: &PriorSpec,
) -> Result<f64, LikelihoodError> {
    let lp = log_prior(params, prior, mask);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(log_likelihood(data, latents, params, fixed, mask)? + lp)
}

/// Seed of chain `index` derived from the run seed by a splitmix64 step.
pub fn chain_seed(seed: u64, index: usize) -> u64 {
    if index == 0 {
        return seed;
    }
    let mut z = seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rwmh_sample(
    data: &ObservedDataset,
    fixed: &FixedRates,
    mask: ModelMask,
    prior: &PriorSpec,
    config: &McmcConfig,
) -> Result<Chain, InferenceError> {
    rwmh_sample_with(data, fixed, mask, prior, config, &mut ())
}

/// Runs `config.n_chains` chains one after another.
pub fn rwmh_sample_chains(
    data: &ObservedDataset,
    fixed: &FixedRates,
    mask: ModelMask,
    prior: &PriorSpec,
    config: &McmcConfig,
) -> Result<Vec<Chain>, InferenceError> {
    (0..config.n_chains)
        .map(|i| {
            let cfg = McmcConfig {
                seed: chain_seed(config.seed, i),
                ..config.clone()
            };
            rwmh_sample(data, fixed, mask, prior, &cfg)
        })
        .collect()
}

fn initial_params(prior: &PriorSpec, mask: ModelMask, config: &McmcConfig) -> Result<ModelParams, InferenceError> {
    let start = match config.initial_params {
        Some(p) => crate::model::apply_mask(p, mask),
        None => prior.means(mask),
    };
    for p in mask.active_params() {
        let v = start.get(p);
        if !(v > 0.0 && v.is_finite()) {
            return Err(InferenceError::InvalidConfig(
                "initial values of active parameters must be positive and finite",
            ));
        }
    }
    Ok(start)
}

/// Single chain with seed `config.seed`; every retained draw is passed to `sink`.
pub fn rwmh_sample_with<S: DrawSink + ?Sized>(
    data: &ObservedDataset,
    fixed: &FixedRates,
    mask: ModelMask,
    prior: &PriorSpec,
    config: &McmcConfig,
    sink: &mut S,
) -> Result<Chain, InferenceError> {
    config.validate()?;
    data.validate()?;
    let start = initial_params(prior, mask, config)?;
    let latents = initial_latents(data, fixed)?;
    let mut state = LikelihoodState::new(data, latents, &start, fixed, mask)?;
    let mut rng: ChaCha8Rng = stream_rng(config.seed, 0);

    let active: Vec<Param> = mask.active_params().collect();
    let mut scales = config.proposal_scales;
    let mut log_lik = state.total();
    let mut log_pri: [f64; 6] = Param::ALL.map(|p| if mask.is_active(p) { prior.get(p).ln_pdf(start.get(p)) } else { 0.0 });

    let mut batch_accepts = [0usize; 6];
    let mut batch_index = 0usize;
    let mut kept_accepts = [0usize; 6];
    let mut kept_latent_accepts = 0usize;
    let retained = config.n_iter - config.n_burnin;
    let mut draws = Vec::with_capacity(retained);
    let mut kept_latents = Vec::new();
    let mut pointwise = Vec::with_capacity(data.months() * 6);

    for iter in 0..config.n_iter {
        let burning = iter < config.n_burnin;
        for &p in &active {
            let i = p.index();
            let z: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.random();
            let scale = scales[i];
            if scale == 0.0 {
                continue;
            }
            let current = state.params().get(p);
            let proposed = current * libm::exp(scale * z);
            if !(proposed > 0.0 && proposed.is_finite()) {
                continue;
            }
            let prior_new = prior.get(p).ln_pdf(proposed);
            let lik_change = state.propose_param(p, proposed);
            // log-scale walk: the Jacobian adds ln(proposed / current)
            let log_ratio = lik_change + prior_new - log_pri[i] + libm::log(proposed) - libm::log(current);
            if libm::log(u) < log_ratio {
                state.commit_param(p, proposed);
                log_lik = state.total();
                log_pri[i] = prior_new;
                if burning {
                    batch_accepts[i] += 1;
                } else {
                    kept_accepts[i] += 1;
                }
            }
        }
        let accepted = sweep(&mut state, &mut rng);
        if accepted > 0 {
            log_lik = state.total();
        }

        if burning {
            if config.adapt && (iter + 1) % ADAPT_BATCH == 0 {
                batch_index += 1;
                let step = (1.0 / libm::sqrt(batch_index as f64)).min(0.1);
                for &p in &active {
                    let i = p.index();
                    let rate = batch_accepts[i] as f64 / ADAPT_BATCH as f64;
                    scales[i] *= libm::exp(if rate > config.target_acceptance { step } else { -step });
                }
            }
            if (iter + 1) % ADAPT_BATCH == 0 {
                batch_accepts = [0; 6];
            }
            continue;
        }

        kept_latent_accepts += accepted;
        let idx = draws.len();
        let params = *state.params();
        draws.push(Draw {
            params,
            log_lik,
            log_post: log_lik + log_pri.iter().sum::<f64>(),
        });
        state.write_pointwise(&mut pointwise);
        sink.record(idx, &params, &pointwise);
        if config.latent_thin > 0 && idx % config.latent_thin == 0 {
            kept_latents.push((idx, state.latents().clone()));
        }
    }

    let mut acceptance = [None; 6];
    for &p in &active {
        acceptance[p.index()] = Some(kept_accepts[p.index()] as f64 / retained as f64);
    }
    let latent_sites = (4 * (2 * data.months()).saturating_sub(1) * retained).max(1);
    Ok(Chain {
        draws,
        latents: kept_latents,
        acceptance,
        latent_acceptance: kept_latent_accepts as f64 / latent_sites as f64,
        proposal_scales: scales,
        mask,
        seed: config.seed,
        months: data.months(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CompartmentState, ExogenousFlows};

    fn toy() -> ObservedDataset {
        ObservedDataset {
            init: CompartmentState {
                s: 200,
                col_ha: 6,
                inf_ha: 2,
                col_ca: 5,
                inf_ca: 3,
                removed: 0,
            },
            new_col_ha: alloc::vec![4, 6, 3],
            new_inf_ha: alloc::vec![1, 2, 1],
            new_col_ca: alloc::vec![5, 4, 6],
            new_inf_ca: alloc::vec![2, 3, 2],
            flows: alloc::vec![ExogenousFlows { admissions: 10, discharges: 10 }; 3],
        }
    }

    fn short(seed: u64) -> McmcConfig {
        McmcConfig {
            n_iter: 600,
            n_burnin: 100,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn zero_scales_freeze_the_parameters() {
        let cfg = McmcConfig {
            proposal_scales: [0.0; 6],
            ..short(3)
        };
        let chain = rwmh_sample(&toy(), &FixedRates::default(), ModelMask::FULL, &PriorSpec::default(), &cfg).unwrap();
        assert_eq!(chain.len(), 500);
        assert!(chain.draws.iter().all(|d| d.params == chain.draws[0].params));
        assert_eq!(chain.draws[0].params.sigma, 2.0);
    }

    #[test]
    fn same_seed_same_chain() {
        let a = rwmh_sample(&toy(), &FixedRates::default(), ModelMask::FULL, &PriorSpec::default(), &short(9)).unwrap();
        let b = rwmh_sample(&toy(), &FixedRates::default(), ModelMask::FULL, &PriorSpec::default(), &short(9)).unwrap();
        assert_eq!(a, b);
        let c = rwmh_sample(&toy(), &FixedRates::default(), ModelMask::FULL, &PriorSpec::default(), &short(10)).unwrap();
        assert_ne!(a.draws, c.draws);
    }

    #[test]
    fn draws_are_positive_and_masked_betas_zero() {
        let mask = ModelMask::from_model_id(4).unwrap();
        let chain = rwmh_sample(&toy(), &FixedRates::default(), mask, &PriorSpec::default(), &short(2)).unwrap();
        for d in &chain.draws {
            assert!(d.params.is_valid());
            assert_eq!(d.params.beta_ch, 0.0);
            assert_eq!(d.params.beta_ih, 0.0);
            assert_eq!(d.params.beta_cc, 0.0);
            assert!(d.params.beta_ic > 0.0);
            assert!(d.log_post.is_finite());
        }
        assert!(chain.acceptance[0].is_none());
        assert!(chain.acceptance[3].is_some());
    }

    #[test]
    fn recorded_log_posterior_matches_fresh_evaluation() {
        let chain = rwmh_sample(&toy(), &FixedRates::default(), ModelMask::FULL, &PriorSpec::default(), &short(4)).unwrap();
        for (idx, lat) in &chain.latents {
            let d = chain.draws[*idx];
            let fresh = log_posterior(&toy(), lat, &d.params, &FixedRates::default(), ModelMask::FULL, &PriorSpec::default())
                .unwrap();
            assert!((fresh - d.log_post).abs() < 1e-9, "{fresh} vs {}", d.log_post);
        }
    }

    #[test]
    fn invalid_configs() {
        let cfg = McmcConfig {
            n_iter: 10,
            n_burnin: 10,
            ..Default::default()
        };
        assert!(rwmh_sample(&toy(), &FixedRates::default(), ModelMask::FULL, &PriorSpec::default(), &cfg).is_err());
    }

    #[test]
    fn chain_seeds_differ() {
        assert_eq!(chain_seed(5, 0), 5);
        assert_ne!(chain_seed(5, 1), chain_seed(5, 2));
    }
}
