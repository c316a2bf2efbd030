use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mrsa_core::inference::{
    potential_scale_reduction, rwmh_sample, summarize_chain, Chain, InferenceError, McmcConfig,
};
use mrsa_core::model::{ModelMask, ModelParams, Param};
use mrsa_core::selection::{fit_and_score, mean_absolute_error, ComparisonRow, ComparisonTable};
use mrsa_core::simulate::{
    posterior_predictive, project_observed, simulate_trajectory, CaArrivals, ColonizedExit, SimulationConfig,
    SimulationError,
};
use mrsa_core::ObservedDataset;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, *};
use crate::config::RunConfig;
use crate::dataset::{load_dataset, write_dataset};
use crate::error::{CliError, Result};

fn inference_error(e: InferenceError) -> CliError {
    match e {
        InferenceError::InvalidConfig(_) | InferenceError::InvalidPrior { .. } | InferenceError::UnknownPriorPreset(_) => {
            CliError::validation(e.to_string())
        }
        _ => CliError::runtime(e.to_string()),
    }
}

fn simulation_error(e: SimulationError) -> CliError {
    match e {
        SimulationError::InvalidConfig(_) | SimulationError::InvalidParams => CliError::validation(e.to_string()),
        _ => CliError::runtime(e.to_string()),
    }
}

/// The configured dataset with the configured initial state applied.
pub fn dataset(cfg: &RunConfig) -> Result<ObservedDataset> {
    let path = cfg
        .data
        .as_ref()
        .ok_or_else(|| CliError::validation("data: no dataset given (set `data` or pass --data)"))?;
    let mut data = load_dataset(path)?;
    data.init = cfg.initial_state(&data);
    data.validate()
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamValues {
    pub beta_ch: f64,
    pub beta_ih: f64,
    pub beta_cc: f64,
    pub beta_ic: f64,
    pub sigma: f64,
    pub alpha: f64,
}

impl From<ModelParams> for ParamValues {
    fn from(p: ModelParams) -> Self {
        ParamValues {
            beta_ch: p.beta_ch,
            beta_ih: p.beta_ih,
            beta_cc: p.beta_cc,
            beta_ic: p.beta_ic,
            sigma: p.sigma,
            alpha: p.alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub seed: u64,
    pub horizon: usize,
    pub params: ParamValues,
    pub colonized_exit: String,
    pub joint_rejections: u64,
    pub joint_rejection_rate: f64,
}

fn exit_name(e: ColonizedExit) -> &'static str {
    match e {
        ColonizedExit::Rejection => "rejection",
        ColonizedExit::InfectionFirst => "infection-first",
    }
}

fn rejection_rate(rejections: u64, draws: usize) -> f64 {
    if draws == 0 {
        return 0.0;
    }
    rejections as f64 / (rejections as f64 + draws as f64)
}

fn simulation_params(cfg: &RunConfig) -> Result<ModelParams> {
    if let Some(p) = cfg.simulate.params {
        return Ok(p);
    }
    match &cfg.simulate.params_from {
        Some(path) => read_json::<FitSummary>(path)?.posterior_means(),
        None => Err(CliError::validation(
            "simulate: no parameters (set [simulate.params] or simulate.params_from)",
        )),
    }
}

/// Simulation settings: replays a configured dataset, otherwise uses the
/// configured horizon, flows and community arrival means.
pub fn simulation_config(cfg: &RunConfig) -> Result<SimulationConfig> {
    let mut sim = if cfg.data.is_some() {
        SimulationConfig::replaying(&dataset(cfg)?, cfg.seed)
    } else {
        let s = &cfg.simulate;
        let mut sim = SimulationConfig::with_defaults(s.horizon, cfg.simulation_initial_state()?, cfg.seed);
        for f in &mut sim.flows {
            f.admissions = s.admissions;
            f.discharges = s.discharges;
        }
        sim.ca_arrivals = CaArrivals::Poisson {
            col_mean: s.ca_col_mean,
            inf_mean: s.ca_inf_mean,
        };
        sim
    };
    sim.colonized_exit = cfg.simulate.colonized_exit;
    Ok(sim)
}

pub fn simulate(cfg: &RunConfig) -> Result<String> {
    let params = simulation_params(cfg)?;
    let sim = simulation_config(cfg)?;
    let traj = simulate_trajectory(&sim, &params, &cfg.fixed, ModelMask::FULL).map_err(simulation_error)?;
    let data = project_observed(&sim, &traj);
    let record = SimulationRecord {
        seed: cfg.seed,
        horizon: sim.horizon,
        params: params.into(),
        colonized_exit: exit_name(sim.colonized_exit).to_string(),
        joint_rejections: traj.joint_rejections,
        joint_rejection_rate: rejection_rate(traj.joint_rejections, traj.months()),
    };
    write_dataset(&data, &cfg.out.join(DATASET_FILE))?;
    write_trajectory(&cfg.out.join(TRAJECTORY_FILE), &traj)?;
    write_json(&cfg.out.join(SIMULATION_FILE), &record)?;
    Ok(format!("simulated {} months into {}\n", sim.horizon, cfg.out.display()))
}

/// Independent chains in parallel; chain `i` uses the seed derived for index `i`.
pub fn sample_chains(
    data: &ObservedDataset,
    cfg: &RunConfig,
    mask: ModelMask,
    prior: &mrsa_core::PriorSpec,
) -> Result<Vec<Chain>> {
    (0..cfg.mcmc.n_chains)
        .into_par_iter()
        .map(|i| {
            let mcmc = McmcConfig {
                seed: mrsa_core::inference::chain_seed(cfg.mcmc.seed, i),
                ..cfg.mcmc.clone()
            };
            rwmh_sample(data, &cfg.fixed, mask, prior, &mcmc).map_err(inference_error)
        })
        .collect()
}

pub fn fit(cfg: &RunConfig) -> Result<String> {
    let data = dataset(cfg)?;
    let mask = cfg.fit_model()?;
    let prior = cfg.fit_prior()?;
    let chains = sample_chains(&data, cfg, mask, &prior.spec)?;
    let merged = Chain::merge(&chains).ok_or_else(|| CliError::runtime("no chains were run"))?;
    let posterior = summarize_chain(&merged).map_err(inference_error)?;
    let summary = fit_summary(
        &posterior,
        mask,
        &prior.label,
        data.months(),
        cfg.mcmc.n_iter,
        cfg.mcmc.n_burnin,
        chains.len(),
        cfg.mcmc.seed,
        |p| potential_scale_reduction(&chains, p),
    );
    write_trace(&cfg.out.join(TRACE_FILE), &chains, cfg.mcmc.n_burnin)?;
    write_json(&cfg.out.join(SUMMARY_FILE), &summary)?;
    Ok(render_summary(&summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedFit {
    pub prior: String,
    pub model_id: u8,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecordJson {
    pub seed: u64,
    pub n_iter: usize,
    pub n_burnin: usize,
    pub priors: Vec<String>,
    pub failures: Vec<FailedFit>,
}

/// Fits every (prior, model) pair in parallel with the same sampler seed.
pub fn comparison_table(data: &ObservedDataset, cfg: &RunConfig) -> Result<(ComparisonTable, Vec<String>)> {
    let priors = cfg.compare_priors()?;
    let models = cfg.compare_models();
    let jobs: Vec<(usize, ModelMask)> = (0..priors.len())
        .flat_map(|p| models.iter().map(move |&m| (p, m)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(p, mask)| ComparisonRow {
            prior_id: p + 1,
            model_id: mask.model_id().unwrap_or(0),
            mask,
            result: fit_and_score(data, &cfg.fixed, mask, &priors[p].spec, &cfg.mcmc),
        })
        .collect();
    Ok((ComparisonTable::from_rows(rows), priors.into_iter().map(|p| p.label).collect()))
}

pub fn compare(cfg: &RunConfig) -> Result<String> {
    cfg.mcmc.validate().map_err(inference_error)?;
    let data = dataset(cfg)?;
    let (table, labels) = comparison_table(&data, cfg)?;
    let failures = table
        .rows
        .iter()
        .filter_map(|r| {
            r.result.as_ref().err().map(|e| FailedFit {
                prior: labels[r.prior_id - 1].clone(),
                model_id: r.model_id,
                error: e.to_string(),
            })
        })
        .collect();
    let record = ComparisonRecordJson {
        seed: cfg.mcmc.seed,
        n_iter: cfg.mcmc.n_iter,
        n_burnin: cfg.mcmc.n_burnin,
        priors: labels.clone(),
        failures,
    };
    write_comparison(&cfg.out.join(COMPARISON_FILE), &table, &labels)?;
    write_json(&cfg.out.join(COMPARISON_JSON_FILE), &record)?;
    let records = read_comparison(&cfg.out.join(COMPARISON_FILE))?;
    Ok(render_comparison(&records, &record.failures))
}

/// Mask of a trace: from the sibling summary when present, otherwise the
/// rates that are nonzero in some draw.
fn trace_mask(chain_path: &Path, rows: &[TraceRow]) -> Result<(ModelMask, Option<usize>)> {
    let summary_path = chain_path.with_file_name(SUMMARY_FILE);
    if summary_path.exists() {
        let s: FitSummary = read_json(&summary_path)?;
        let active = |p: Param| s.active_params.iter().any(|n| n == p.name());
        let mask = ModelMask::new(
            active(Param::BetaCh),
            active(Param::BetaIh),
            active(Param::BetaCc),
            active(Param::BetaIc),
        )
        .map_err(|e| CliError::validation(format!("{}: {e}", summary_path.display())))?;
        return Ok((mask, Some(s.months)));
    }
    let used = |p: Param| rows.iter().any(|r| r.params.get(p) != 0.0);
    let mask = ModelMask::new(used(Param::BetaCh), used(Param::BetaIh), used(Param::BetaCc), used(Param::BetaIc))
        .unwrap_or(ModelMask::FULL);
    Ok((mask, None))
}

pub fn ppc(cfg: &RunConfig, chain: Option<&Path>) -> Result<String> {
    let chain_path: PathBuf = chain
        .map(Path::to_path_buf)
        .or_else(|| cfg.ppc_chain.clone())
        .unwrap_or_else(|| cfg.out.join(TRACE_FILE));
    if !chain_path.exists() {
        return Err(CliError::validation(format!("chain {} does not exist", chain_path.display())));
    }
    let data = dataset(cfg)?;
    let rows = read_trace(&chain_path)?;
    let (mask, months) = trace_mask(&chain_path, &rows)?;
    if let Some(m) = months {
        if m != data.months() {
            return Err(CliError::validation(format!(
                "chain was fitted to {m} months but the dataset has {}",
                data.months()
            )));
        }
    }
    let draws: Vec<ModelParams> = rows.iter().map(|r| r.params).collect();
    let mut sim = SimulationConfig::replaying(&data, cfg.seed);
    sim.colonized_exit = cfg.simulate.colonized_exit;
    let summary = posterior_predictive(&draws, &sim, &cfg.fixed, mask, cfg.ppc_replicates, cfg.seed)
        .map_err(simulation_error)?;
    let mae = |obs: &[u64], pred: Vec<f64>| {
        mean_absolute_error(obs, &pred).map_err(|e| CliError::runtime(e.to_string()))
    };
    let (cov_col, cov_inf) = summary.coverage(&data.new_col_ha, &data.new_inf_ha);
    let report = PpcReport {
        mae_colonization: mae(&data.new_col_ha, summary.mean_colonization())?,
        mae_infection: mae(&data.new_inf_ha, summary.mean_infection())?,
        coverage_fraction: (cov_col + cov_inf) / 2.0,
        coverage_colonization: cov_col,
        coverage_infection: cov_inf,
        n_rep: summary.n_rep,
        months: data.months(),
        joint_rejections: summary.joint_rejections,
        joint_rejection_rate: rejection_rate(summary.joint_rejections, summary.n_rep * data.months()),
    };
    write_band(&cfg.out.join(BAND_FILE), &summary)?;
    write_json(&cfg.out.join(PPC_FILE), &report)?;
    Ok(render_ppc(&report))
}

fn render_summary(s: &FitSummary) -> String {
    let mut out = String::new();
    let model = if s.model_id == 0 { "custom".to_string() } else { s.model_id.to_string() };
    let _ = writeln!(
        out,
        "Model {model}, prior {}: {} draws from {} chain(s), {} months\n",
        s.prior, s.n_draws, s.n_chains, s.months
    );
    out.push_str("| parameter | mean | 95% CI | ESS | acceptance | R-hat |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for p in &s.params {
        let rhat = p.r_hat.map(|r| format!("{r:.3}")).unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            out,
            "| {} | {:.4} | [{:.4}, {:.4}] | {:.0} | {:.3} | {rhat} |",
            p.name, p.mean, p.ci_low, p.ci_high, p.ess, p.acceptance
        );
    }
    let _ = writeln!(out, "\nLatent acceptance: {:.3}", s.latent_acceptance);
    out
}

fn render_comparison(rows: &[ComparisonRecord], failures: &[FailedFit]) -> String {
    let mut out = String::new();
    out.push_str("| prior | model | active | WAIC | lppd | p_waic |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for r in rows {
        let f = |x: Option<f64>| x.map(|v| format!("{v:.2}")).unwrap_or_else(|| "FAILED".to_string());
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            r.prior,
            r.model_id,
            r.active_params.join(", "),
            f(r.waic),
            f(r.lppd),
            f(r.p_waic)
        );
    }
    let mut sds: Vec<(&str, f64)> = Vec::new();
    for r in rows {
        if let Some(sd) = r.sd_group {
            if !sds.iter().any(|(p, _)| *p == r.prior) {
                sds.push((&r.prior, sd));
            }
        }
    }
    if !sds.is_empty() {
        out.push('\n');
        for (p, sd) in sds {
            let _ = writeln!(out, "WAIC s.d. under prior {p}: {sd:.2}");
        }
    }
    if !failures.is_empty() {
        out.push('\n');
        for f in failures {
            let _ = writeln!(out, "FAILED: prior {}, model {}: {}", f.prior, f.model_id, f.error);
        }
    }
    out
}

fn render_ppc(r: &PpcReport) -> String {
    format!(
        "| channel | MAE | coverage |\n|---|---|---|\n| colonization | {:.3} | {:.3} |\n| infection | {:.3} | {:.3} |\n\n{} replicates over {} months, joint exit redraw rate {:.4}\n",
        r.mae_colonization,
        r.coverage_colonization,
        r.mae_infection,
        r.coverage_infection,
        r.n_rep,
        r.months,
        r.joint_rejection_rate
    )
}

pub fn report(dir: &Path) -> Result<String> {
    let mut out = String::from("# MRSA model run report\n\n");
    let mut found = 0;
    let mut missing = Vec::new();
    let mut flags = Vec::new();

    let summary_path = dir.join(SUMMARY_FILE);
    if summary_path.exists() {
        let s: FitSummary = read_json(&summary_path)?;
        found += 1;
        out.push_str("## Fit\n\n");
        out.push_str(&render_summary(&s));
        out.push('\n');
        flags.extend(s.diagnostics.iter().cloned());
        if !dir.join(TRACE_FILE).exists() {
            missing.push(TRACE_FILE);
        }
    } else {
        missing.push(SUMMARY_FILE);
    }

    let comparison_path = dir.join(COMPARISON_FILE);
    if comparison_path.exists() {
        let rows = read_comparison(&comparison_path)?;
        let json_path = dir.join(COMPARISON_JSON_FILE);
        let failures = if json_path.exists() {
            read_json::<ComparisonRecordJson>(&json_path)?.failures
        } else {
            Vec::new()
        };
        found += 1;
        out.push_str("## Model comparison\n\n");
        out.push_str(&render_comparison(&rows, &failures));
        out.push('\n');
        for r in rows.iter().filter(|r| r.waic.is_none()) {
            flags.push(format!("model {} under prior {} failed", r.model_id, r.prior));
        }
    } else {
        missing.push(COMPARISON_FILE);
    }

    let ppc_path = dir.join(PPC_FILE);
    if ppc_path.exists() {
        let r: PpcReport = read_json(&ppc_path)?;
        found += 1;
        out.push_str("## Posterior predictive check\n\n");
        out.push_str(&render_ppc(&r));
        out.push('\n');
        if r.joint_rejections > 0 {
            flags.push(format!("posterior predictive: joint exit redraw rate {:.4}", r.joint_rejection_rate));
        }
    } else {
        missing.push(PPC_FILE);
    }

    let sim_path = dir.join(SIMULATION_FILE);
    if sim_path.exists() {
        let r: SimulationRecord = read_json(&sim_path)?;
        found += 1;
        let _ = writeln!(
            out,
            "## Simulation\n\n{} months, seed {}, colonized exit `{}`, joint exit redraw rate {:.4}\n",
            r.horizon, r.seed, r.colonized_exit, r.joint_rejection_rate
        );
        if r.joint_rejections > 0 {
            flags.push(format!("simulation: joint exit redraw rate {:.4}", r.joint_rejection_rate));
        }
    } else {
        missing.push(SIMULATION_FILE);
    }

    if found == 0 {
        return Ok(format!("no artifacts found in {}\n", dir.display()));
    }
    out.push_str("## Diagnostics\n\n");
    if flags.is_empty() {
        out.push_str("No flags.\n");
    }
    for f in &flags {
        let _ = writeln!(out, "- {f}");
    }
    if !missing.is_empty() {
        let _ = writeln!(out, "\nNot present: {}", missing.join(", "));
    }
    artifacts::write_atomic(&dir.join(REPORT_FILE), out.as_bytes())?;
    Ok(out)
}
