//! Run configuration read from TOML; every unknown key is rejected.

use std::path::{Path, PathBuf};

use mrsa_core::inference::{GammaPrior, McmcConfig, PriorSpec};
use mrsa_core::model::{Count, FixedRates, ModelMask, ModelParams, Param};
use mrsa_core::simulate::{
    ColonizedExit, DEFAULT_CA_COLONIZED_MEAN, DEFAULT_CA_INFECTED_MEAN, DEFAULT_HORIZON, DEFAULT_MONTHLY_FLOW,
};
use mrsa_core::ObservedDataset;
use serde::Deserialize;

use crate::dataset::DEFAULT_INITIAL_SUSCEPTIBLE;
use crate::error::{CliError, Result};

pub const OUT_DIR_ENV: &str = "MRSA_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "mrsa-out";
pub const DEFAULT_PPC_REPLICATES: usize = 1000;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    model: Option<ModelChoice>,
    prior: Option<PriorChoice>,
    #[serde(default)]
    init: RawInit,
    #[serde(default)]
    fixed: RawFixed,
    #[serde(default)]
    mcmc: RawMcmc,
    #[serde(default)]
    simulate: RawSimulate,
    #[serde(default)]
    ppc: RawPpc,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    s: Option<Count>,
    col_ha: Option<Count>,
    inf_ha: Option<Count>,
    col_ca: Option<Count>,
    inf_ca: Option<Count>,
    removed: Option<Count>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixed {
    rho1: Option<f64>,
    rho2: Option<f64>,
    rho3: Option<f64>,
    rho4: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMcmc {
    n_iter: Option<usize>,
    n_burnin: Option<usize>,
    proposal_scale: Option<f64>,
    adapt: Option<bool>,
    target_acceptance: Option<f64>,
    n_chains: Option<usize>,
    latent_thin: Option<usize>,
    initial: Option<RawParams>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub beta_ch: Option<f64>,
    pub beta_ih: Option<f64>,
    pub beta_cc: Option<f64>,
    pub beta_ic: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
}

impl RawParams {
    fn resolve(&self, key: &str) -> Result<ModelParams> {
        let p = ModelParams {
            beta_ch: self.beta_ch.unwrap_or(0.0),
            beta_ih: self.beta_ih.unwrap_or(0.0),
            beta_cc: self.beta_cc.unwrap_or(0.0),
            beta_ic: self.beta_ic.unwrap_or(0.0),
            sigma: self.sigma.unwrap_or(0.0),
            alpha: self.alpha.unwrap_or(0.0),
        };
        for param in Param::ALL {
            let v = p.get(param);
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::validation(format!(
                    "{key}.{}: must be finite and non-negative, got {v}",
                    param.name()
                )));
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    horizon: Option<usize>,
    admissions: Option<Count>,
    discharges: Option<Count>,
    ca_col_mean: Option<f64>,
    ca_inf_mean: Option<f64>,
    colonized_exit: Option<ExitChoice>,
    params: Option<RawParams>,
    params_from: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ExitChoice {
    Rejection,
    InfectionFirst,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPpc {
    n_rep: Option<usize>,
    chain: Option<PathBuf>,
}

/// `15`, `"all"`, or a list of model ids.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum ModelChoice {
    One(u8),
    Many(Vec<u8>),
    Named(String),
}

/// A preset id, `"all"`, a list of presets, or per-parameter gamma priors.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PriorChoice {
    Preset(u8),
    Presets(Vec<u8>),
    Named(String),
    Custom(CustomPrior),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomPrior {
    beta_ch: Option<RawGamma>,
    beta_ih: Option<RawGamma>,
    beta_cc: Option<RawGamma>,
    beta_ic: Option<RawGamma>,
    sigma: Option<RawGamma>,
    alpha: Option<RawGamma>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGamma {
    shape: f64,
    rate: f64,
}

impl CustomPrior {
    /// Unlisted parameters keep preset 1.
    fn resolve(&self, key: &str) -> Result<PriorSpec> {
        let mut spec = PriorSpec::default();
        let entries = [self.beta_ch, self.beta_ih, self.beta_cc, self.beta_ic, self.sigma, self.alpha];
        for (param, entry) in Param::ALL.into_iter().zip(entries) {
            if let Some(g) = entry {
                spec.priors[param.index()] = GammaPrior::new(g.shape, g.rate)
                    .map_err(|e| CliError::validation(format!("{key}.{}: {e}", param.name())))?;
            }
        }
        Ok(spec)
    }
}

/// A prior together with the label written into artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedPrior {
    pub label: String,
    pub spec: PriorSpec,
}

impl NamedPrior {
    pub fn preset(id: u8) -> Result<Self> {
        let spec = PriorSpec::preset(id).map_err(|e| CliError::validation(format!("prior: {e}")))?;
        Ok(NamedPrior {
            label: id.to_string(),
            spec,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSettings {
    pub horizon: usize,
    pub admissions: Count,
    pub discharges: Count,
    pub ca_col_mean: f64,
    pub ca_inf_mean: f64,
    pub colonized_exit: ColonizedExit,
    pub params: Option<ModelParams>,
    pub params_from: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    init: RawInit,
    pub fixed: FixedRates,
    pub models: Option<Vec<ModelMask>>,
    pub priors: Option<Vec<NamedPrior>>,
    pub mcmc: McmcConfig,
    pub simulate: SimulateSettings,
    pub ppc_replicates: usize,
    pub ppc_chain: Option<PathBuf>,
    out_from_file: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_raw(RawConfig::default(), None).expect("defaults are valid")
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub model: Option<String>,
    pub prior: Option<String>,
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    parse_config(&text, path.parent())
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

/// Parses TOML text; relative paths are resolved against `base`.
pub fn parse_config(text: &str, base: Option<&Path>) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        match e.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                CliError::validation(format!("line {line}: {msg}"))
            }
            None => CliError::validation(msg),
        }
    })?;
    RunConfig::from_raw(raw, base)
}

fn resolve_path(base: Option<&Path>, p: PathBuf) -> PathBuf {
    match base {
        Some(b) if p.is_relative() && !b.as_os_str().is_empty() => b.join(p),
        _ => p,
    }
}

pub fn parse_model_choice(choice: &ModelChoice, key: &str) -> Result<Option<Vec<ModelMask>>> {
    let one = |id: u8| {
        ModelMask::from_model_id(id).map_err(|_| CliError::validation(format!("{key}: model id must be 1..=15, got {id}")))
    };
    match choice {
        ModelChoice::One(id) => Ok(Some(vec![one(*id)?])),
        ModelChoice::Many(ids) if ids.is_empty() => Err(CliError::validation(format!("{key}: empty model list"))),
        ModelChoice::Many(ids) => ids.iter().map(|&id| one(id)).collect::<Result<Vec<_>>>().map(Some),
        ModelChoice::Named(s) if s == "all" => Ok(None),
        ModelChoice::Named(s) => s
            .split(',')
            .map(|part| match part.trim().parse::<u8>() {
                Ok(id) => one(id),
                Err(_) => Err(CliError::validation(format!(
                    "{key}: expected 1..=15, a comma-separated list or \"all\", got `{s}`"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some),
    }
}

fn parse_prior_choice(choice: &PriorChoice, key: &str) -> Result<Option<Vec<NamedPrior>>> {
    match choice {
        PriorChoice::Preset(id) => Ok(Some(vec![NamedPrior::preset(*id)?])),
        PriorChoice::Presets(ids) if ids.is_empty() => Err(CliError::validation(format!("{key}: empty prior list"))),
        PriorChoice::Presets(ids) => ids.iter().map(|&id| NamedPrior::preset(id)).collect::<Result<Vec<_>>>().map(Some),
        PriorChoice::Named(s) if s == "all" => Ok(None),
        PriorChoice::Named(s) => match s.parse::<u8>() {
            Ok(id) => Ok(Some(vec![NamedPrior::preset(id)?])),
            Err(_) => Err(CliError::validation(format!("{key}: expected 1, 2, 3, \"all\" or a table, got `{s}`"))),
        },
        PriorChoice::Custom(c) => Ok(Some(vec![NamedPrior {
            label: "custom".to_string(),
            spec: c.resolve(key)?,
        }])),
    }
}

/// `--prior` accepts a preset id or the path of a TOML file of gamma priors.
pub fn parse_prior_flag(value: &str) -> Result<Option<Vec<NamedPrior>>> {
    if value == "all" {
        return Ok(None);
    }
    if let Ok(id) = value.parse::<u8>() {
        return Ok(Some(vec![NamedPrior::preset(id)?]));
    }
    let path = Path::new(value);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    let custom: CustomPrior = toml::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {}", path.display(), e.message())))?;
    let spec = custom.resolve(&path.display().to_string())?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".to_string());
    Ok(Some(vec![NamedPrior { label, spec }]))
}

impl RunConfig {
    fn from_raw(raw: RawConfig, base: Option<&Path>) -> Result<Self> {
        let defaults = McmcConfig::default();
        let scale = raw.mcmc.proposal_scale.unwrap_or(defaults.proposal_scales[0]);
        if !(scale.is_finite() && scale > 0.0) {
            return Err(CliError::validation(format!("mcmc.proposal_scale: must be positive, got {scale}")));
        }
        let mcmc = McmcConfig {
            n_iter: raw.mcmc.n_iter.unwrap_or(defaults.n_iter),
            n_burnin: raw.mcmc.n_burnin.unwrap_or(defaults.n_burnin),
            initial_params: raw.mcmc.initial.map(|p| p.resolve("mcmc.initial")).transpose()?,
            proposal_scales: [scale; 6],
            adapt: raw.mcmc.adapt.unwrap_or(defaults.adapt),
            target_acceptance: raw.mcmc.target_acceptance.unwrap_or(defaults.target_acceptance),
            n_chains: raw.mcmc.n_chains.unwrap_or(defaults.n_chains),
            seed: raw.seed.unwrap_or(defaults.seed),
            latent_thin: raw.mcmc.latent_thin.unwrap_or(defaults.latent_thin),
        };
        if mcmc.n_burnin >= mcmc.n_iter {
            return Err(CliError::validation(format!(
                "mcmc.n_burnin: must be smaller than mcmc.n_iter ({} >= {})",
                mcmc.n_burnin, mcmc.n_iter
            )));
        }
        if !(mcmc.target_acceptance > 0.0 && mcmc.target_acceptance < 1.0) {
            return Err(CliError::validation("mcmc.target_acceptance: must lie in (0, 1)"));
        }
        if mcmc.n_chains == 0 {
            return Err(CliError::validation("mcmc.n_chains: must be at least 1"));
        }

        let fixed_default = FixedRates::default();
        let fixed = FixedRates {
            rho1: raw.fixed.rho1.unwrap_or(fixed_default.rho1),
            rho2: raw.fixed.rho2.unwrap_or(fixed_default.rho2),
            rho3: raw.fixed.rho3.unwrap_or(fixed_default.rho3),
            rho4: raw.fixed.rho4.unwrap_or(fixed_default.rho4),
        };
        for (name, v) in [("rho1", fixed.rho1), ("rho2", fixed.rho2), ("rho3", fixed.rho3), ("rho4", fixed.rho4)] {
            if v.is_nan() || v <= 0.0 {
                return Err(CliError::validation(format!("fixed.{name}: must be positive, got {v}")));
            }
        }

        let sim = raw.simulate;
        let horizon = sim.horizon.unwrap_or(DEFAULT_HORIZON);
        if horizon == 0 {
            return Err(CliError::validation("simulate.horizon: must be at least 1"));
        }
        let ca_col_mean = sim.ca_col_mean.unwrap_or(DEFAULT_CA_COLONIZED_MEAN);
        let ca_inf_mean = sim.ca_inf_mean.unwrap_or(DEFAULT_CA_INFECTED_MEAN);
        for (name, v) in [("ca_col_mean", ca_col_mean), ("ca_inf_mean", ca_inf_mean)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::validation(format!("simulate.{name}: must be finite and non-negative")));
            }
        }
        if sim.params.is_some() && sim.params_from.is_some() {
            return Err(CliError::validation("simulate: give either `params` or `params_from`, not both"));
        }
        let simulate = SimulateSettings {
            horizon,
            admissions: sim.admissions.unwrap_or(DEFAULT_MONTHLY_FLOW),
            discharges: sim.discharges.unwrap_or(DEFAULT_MONTHLY_FLOW),
            ca_col_mean,
            ca_inf_mean,
            colonized_exit: match sim.colonized_exit {
                Some(ExitChoice::Rejection) => ColonizedExit::Rejection,
                Some(ExitChoice::InfectionFirst) | None => ColonizedExit::InfectionFirst,
            },
            params: sim.params.map(|p| p.resolve("simulate.params")).transpose()?,
            params_from: sim.params_from.map(|p| resolve_path(base, p)),
        };

        let n_rep = raw.ppc.n_rep.unwrap_or(DEFAULT_PPC_REPLICATES);
        if n_rep == 0 {
            return Err(CliError::validation("ppc.n_rep: must be at least 1"));
        }

        Ok(RunConfig {
            data: raw.data.map(|p| resolve_path(base, p)),
            out: raw
                .out
                .clone()
                .map(|p| resolve_path(base, p))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            seed: mcmc.seed,
            init: raw.init,
            fixed,
            models: raw.model.as_ref().map(|m| parse_model_choice(m, "model")).transpose()?.flatten(),
            priors: raw.prior.as_ref().map(|p| parse_prior_choice(p, "prior")).transpose()?.flatten(),
            mcmc,
            simulate,
            ppc_replicates: n_rep,
            ppc_chain: raw.ppc.chain.map(|p| resolve_path(base, p)),
            out_from_file: raw.out.is_some(),
        })
    }

    /// Applies command-line values. `out_env` is the output directory from
    /// the environment, used when neither the flag nor the file sets one.
    pub fn apply(&mut self, o: &Overrides, out_env: Option<PathBuf>) -> Result<()> {
        if let Some(d) = &o.data {
            self.data = Some(d.clone());
        }
        if let Some(s) = o.seed {
            self.seed = s;
            self.mcmc.seed = s;
        }
        match (&o.out, self.out_from_file, out_env) {
            (Some(out), _, _) => self.out = out.clone(),
            (None, false, Some(env)) => self.out = env,
            _ => {}
        }
        if let Some(m) = &o.model {
            self.models = parse_model_choice(&ModelChoice::Named(m.clone()), "--model")?;
        }
        if let Some(p) = &o.prior {
            self.priors = parse_prior_flag(p)?;
        }
        Ok(())
    }

    /// Initial state for `data`: explicit values first, then the defaults
    /// (3048 susceptibles, first-month counts, nobody removed).
    pub fn initial_state(&self, data: &ObservedDataset) -> mrsa_core::CompartmentState {
        let d = data.init;
        mrsa_core::CompartmentState {
            s: self.init.s.unwrap_or(d.s),
            col_ha: self.init.col_ha.unwrap_or(d.col_ha),
            inf_ha: self.init.inf_ha.unwrap_or(d.inf_ha),
            col_ca: self.init.col_ca.unwrap_or(d.col_ca),
            inf_ca: self.init.inf_ca.unwrap_or(d.inf_ca),
            removed: self.init.removed.unwrap_or(d.removed),
        }
    }

    /// Initial state for a simulation with no dataset; carrier pools must be
    /// given explicitly.
    pub fn simulation_initial_state(&self) -> Result<mrsa_core::CompartmentState> {
        let need = |v: Option<Count>, key: &str| {
            v.ok_or_else(|| CliError::validation(format!("init.{key}: required to simulate without a dataset")))
        };
        Ok(mrsa_core::CompartmentState {
            s: self.init.s.unwrap_or(DEFAULT_INITIAL_SUSCEPTIBLE),
            col_ha: need(self.init.col_ha, "col_ha")?,
            inf_ha: need(self.init.inf_ha, "inf_ha")?,
            col_ca: need(self.init.col_ca, "col_ca")?,
            inf_ca: need(self.init.inf_ca, "inf_ca")?,
            removed: self.init.removed.unwrap_or(0),
        })
    }

    /// The single model a fit runs; defaults to the full model.
    pub fn fit_model(&self) -> Result<ModelMask> {
        match self.models.as_deref() {
            None => Ok(ModelMask::FULL),
            Some([m]) => Ok(*m),
            Some(_) => Err(CliError::validation("fit takes one model; use compare for several")),
        }
    }

    pub fn fit_prior(&self) -> Result<NamedPrior> {
        match self.priors.as_deref() {
            None => NamedPrior::preset(1),
            Some([p]) => Ok(p.clone()),
            Some(_) => Err(CliError::validation("fit takes one prior; use compare for several")),
        }
    }

    pub fn compare_models(&self) -> Vec<ModelMask> {
        self.models.clone().unwrap_or_else(mrsa_core::selection::enumerate_models)
    }

    pub fn compare_priors(&self) -> Result<Vec<NamedPrior>> {
        match &self.priors {
            Some(p) => Ok(p.clone()),
            None => (1..=3).map(NamedPrior::preset).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c = parse_config("", None).unwrap();
        assert_eq!(c.mcmc.n_iter, 60_000);
        assert_eq!(c.mcmc.n_burnin, 10_000);
        assert_eq!(c.fixed, FixedRates::default());
        assert_eq!(c.fit_prior().unwrap().spec, PriorSpec::preset(1).unwrap());
        assert_eq!(c.fit_model().unwrap(), ModelMask::FULL);
        assert_eq!(c.compare_priors().unwrap().len(), 3);
        assert_eq!(c.compare_models().len(), 15);
        assert_eq!(c.simulate.horizon, 61);
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn prior_presets_and_custom() {
        let c = parse_config("prior = 2", None).unwrap();
        let spec = c.fit_prior().unwrap().spec;
        for p in Param::ALL {
            assert_eq!(spec.get(p), GammaPrior { shape: 1.0, rate: 1.0 });
        }
        let c = parse_config("prior = [1, 3]", None).unwrap();
        assert_eq!(c.compare_priors().unwrap().len(), 2);
        assert!(c.fit_prior().is_err());
        let c = parse_config("[prior]\nsigma = { shape = 2.0, rate = 3.0 }\n", None).unwrap();
        let spec = c.fit_prior().unwrap().spec;
        assert_eq!(spec.get(Param::Sigma), GammaPrior { shape: 2.0, rate: 3.0 });
        assert_eq!(spec.get(Param::Alpha), GammaPrior { shape: 1.0, rate: 0.5 });
        assert!(parse_config("prior = 4", None).is_err());
    }

    #[test]
    fn models() {
        let c = parse_config("model = 4", None).unwrap();
        assert_eq!(c.fit_model().unwrap(), ModelMask::from_model_id(4).unwrap());
        let c = parse_config("model = \"all\"", None).unwrap();
        assert!(c.fit_model().unwrap() == ModelMask::FULL && c.models.is_none());
        assert!(parse_config("model = 16", None).is_err());
        let c = parse_config("model = \"1, 15\"", None).unwrap();
        assert_eq!(c.compare_models(), vec![ModelMask::from_model_id(1).unwrap(), ModelMask::FULL]);
        assert!(parse_config("model = \"1,x\"", None).is_err());
    }

    fn err(text: &str) -> String {
        parse_config(text, None).unwrap_err().to_string()
    }

    #[test]
    fn strict_keys_and_invariants() {
        assert!(err("sed = 3").contains("unknown field `sed`"));
        assert!(err("[mcmc]\nn_iters = 5\n").contains("unknown field `n_iters`"));
        let e = err("[mcmc]\nn_iter = 100\nn_burnin = 100\n");
        assert!(e.contains("mcmc.n_burnin"), "{e}");
        assert!(err("[fixed]\nrho2 = -1.0\n").contains("fixed.rho2"));
        assert!(err("[simulate.params]\nalpha = -0.1\n").contains("simulate.params.alpha"));
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = parse_config("seed = 3\nmodel = 2\n", None).unwrap();
        let o = Overrides {
            seed: Some(9),
            model: Some("all".into()),
            prior: Some("3".into()),
            ..Default::default()
        };
        c.apply(&o, Some(PathBuf::from("/tmp/x"))).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.mcmc.seed, 9);
        assert!(c.models.is_none());
        assert_eq!(c.fit_prior().unwrap().label, "3");
        assert_eq!(c.out, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let c = parse_config("data = \"d.csv\"\nout = \"o\"\n", Some(Path::new("/a/b"))).unwrap();
        assert_eq!(c.data.unwrap(), PathBuf::from("/a/b/d.csv"));
        assert_eq!(c.out, PathBuf::from("/a/b/o"));
    }

    #[test]
    fn initial_state_overrides() {
        let c = parse_config("[init]\ns = 100\ncol_ha = 3\n", None).unwrap();
        let mut d = ObservedDataset::empty(Default::default());
        d.init.inf_ha = 4;
        let st = c.initial_state(&d);
        assert_eq!((st.s, st.col_ha, st.inf_ha), (100, 3, 4));
        assert!(c.simulation_initial_state().is_err());
    }
}
