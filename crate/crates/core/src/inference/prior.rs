use crate::model::{ModelMask, ModelParams, Param};

use super::InferenceError;

/// Gamma distribution in shape/rate form; mean is `shape / rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self, InferenceError> {
        if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
            return Err(InferenceError::InvalidPrior { shape, rate });
        }
        Ok(GammaPrior { shape, rate })
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    /// Log density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x.is_nan() || x < 0.0 || x.is_infinite() {
            return f64::NEG_INFINITY;
        }
        let mut v = self.shape * libm::log(self.rate) - libm::lgamma(self.shape) - self.rate * x;
        if self.shape != 1.0 {
            v += (self.shape - 1.0) * libm::log(x);
        }
        v
    }
}

/// One gamma prior per estimated parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub priors: [GammaPrior; 6],
}

impl PriorSpec {
    pub fn uniform(prior: GammaPrior) -> Self {
        PriorSpec { priors: [prior; 6] }
    }

    /// Presets 1, 2 and 3: Γ(1, 0.5), Γ(1, 1) and Γ(1, 1.5) on every parameter.
    pub fn preset(id: u8) -> Result<Self, InferenceError> {
        let rate = match id {
            1 => 0.5,
            2 => 1.0,
            3 => 1.5,
            _ => return Err(InferenceError::UnknownPriorPreset(id)),
        };
        Ok(PriorSpec::uniform(GammaPrior { shape: 1.0, rate }))
    }

    pub fn get(&self, p: Param) -> GammaPrior {
        self.priors[p.index()]
    }

    /// Prior means for the active parameters; masked betas are zero.
    pub fn means(&self, mask: ModelMask) -> ModelParams {
        let mut out = ModelParams::default();
        for p in mask.active_params() {
            out.set(p, self.get(p).mean());
        }
        out
    }
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::preset(1).expect("preset 1 exists")
    }
}

/// Sum of gamma log-densities over the parameters active under `mask`.
pub fn log_prior(params: &ModelParams, prior: &PriorSpec, mask: ModelMask) -> f64 {
    mask.active_params().map(|p| prior.get(p).ln_pdf(params.get(p))).sum()
}
