use alloc::vec::Vec;

use super::sampler::Chain;
use super::InferenceError;
use crate::model::Param;
use crate::stats::{effective_sample_size, mean, quantile_sorted, sample_variance, sorted_copy};

/// Marginal summary of one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSummary {
    pub param: Param,
    pub mean: f64,
    /// Equal-tailed 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub ess: f64,
    /// True when the series is constant and the ESS is only nominal.
    pub degenerate: bool,
    pub acceptance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub n_draws: usize,
    pub params: Vec<ParamSummary>,
    pub latent_acceptance: f64,
}

impl PosteriorSummary {
    pub fn get(&self, p: Param) -> Option<&ParamSummary> {
        self.params.iter().find(|s| s.param == p)
    }
}

/// Summaries of the parameters active in the chain's model.
pub fn summarize_chain(chain: &Chain) -> Result<PosteriorSummary, InferenceError> {
    if chain.is_empty() {
        return Err(InferenceError::EmptyChain);
    }
    let params = chain
        .mask
        .active_params()
        .map(|p| {
            let xs = chain.series(p);
            let sorted = sorted_copy(&xs);
            let ess = effective_sample_size(&xs);
            ParamSummary {
                param: p,
                mean: mean(&xs),
                ci_low: quantile_sorted(&sorted, 0.025),
                ci_high: quantile_sorted(&sorted, 0.975),
                ess: ess.value,
                degenerate: ess.degenerate,
                acceptance: chain.acceptance[p.index()].unwrap_or(0.0),
            }
        })
        .collect();
    Ok(PosteriorSummary {
        n_draws: chain.len(),
        params,
        latent_acceptance: chain.latent_acceptance,
    })
}

/// Gelman–Rubin R-hat of `p` over chains of equal length.
pub fn potential_scale_reduction(chains: &[Chain], p: Param) -> Option<f64> {
    let m = chains.len();
    let n = chains.iter().map(Chain::len).min()?;
    if m < 2 || n < 2 {
        return None;
    }
    let series: Vec<Vec<f64>> = chains.iter().map(|c| c.series(p)[..n].to_vec()).collect();
    let means: Vec<f64> = series.iter().map(|s| mean(s)).collect();
    let w = series.iter().map(|s| sample_variance(s)).sum::<f64>() / m as f64;
    let b = n as f64 * sample_variance(&means);
    if w == 0.0 {
        return if b == 0.0 { Some(1.0) } else { None };
    }
    let var = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    Some(libm::sqrt(var / w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::sampler::Draw;
    use crate::model::{ModelMask, ModelParams};

    fn chain(values: &[f64]) -> Chain {
        let draws = values
            .iter()
            .map(|&a| Draw {
                params: ModelParams {
                    beta_ch: 1.0,
                    sigma: 0.1,
                    alpha: a,
                    ..Default::default()
                },
                log_lik: 0.0,
                log_post: 0.0,
            })
            .collect();
        Chain {
            draws,
            latents: Vec::new(),
            acceptance: [Some(0.4), None, None, None, Some(0.5), Some(0.3)],
            latent_acceptance: 0.2,
            proposal_scales: [0.5; 6],
            mask: ModelMask::from_model_id(1).unwrap(),
            seed: 0,
            months: 1,
        }
    }

    #[test]
    fn summary_of_linear_series() {
        let xs: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let s = summarize_chain(&chain(&xs)).unwrap();
        assert_eq!(s.params.len(), 3);
        let a = s.get(Param::Alpha).unwrap();
        assert_eq!(a.mean, 50.0);
        assert!((a.ci_low - 2.5).abs() < 1e-12);
        assert!((a.ci_high - 97.5).abs() < 1e-12);
        assert_eq!(a.acceptance, 0.3);
        let b = s.get(Param::BetaCh).unwrap();
        assert!(b.degenerate);
        assert!(s.get(Param::BetaIh).is_none());
    }

    #[test]
    fn empty_chain_is_an_error() {
        assert_eq!(summarize_chain(&chain(&[])), Err(InferenceError::EmptyChain));
    }

    #[test]
    fn r_hat_detects_separated_chains() {
        let a: Vec<f64> = (0..200).map(|i| (i % 7) as f64).collect();
        let b: Vec<f64> = (0..200).map(|i| (i % 7) as f64 + 0.01).collect();
        let far: Vec<f64> = (0..200).map(|i| (i % 7) as f64 + 50.0).collect();
        let close = potential_scale_reduction(&[chain(&a), chain(&b)], Param::Alpha).unwrap();
        assert!((close - 1.0).abs() < 0.01, "{close}");
        let apart = potential_scale_reduction(&[chain(&a), chain(&far)], Param::Alpha).unwrap();
        assert!(apart > 5.0);
        assert!(potential_scale_reduction(&[chain(&a)], Param::Alpha).is_none());
    }
}
