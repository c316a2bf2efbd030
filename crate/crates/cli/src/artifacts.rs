//! On-disk artifact formats. Every file is written to a temporary sibling
//! and renamed into place.

use std::io::Write;
use std::path::Path;

use mrsa_core::inference::{Chain, PosteriorSummary};
use mrsa_core::model::{ModelMask, ModelParams, Param};
use mrsa_core::selection::ComparisonTable;
use mrsa_core::simulate::{ReplicateSummary, Trajectory};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const DATASET_FILE: &str = "dataset.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SIMULATION_FILE: &str = "simulation.json";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const COMPARISON_JSON_FILE: &str = "comparison.json";
pub const BAND_FILE: &str = "ppc_band.csv";
pub const PPC_FILE: &str = "ppc.json";
pub const REPORT_FILE: &str = "report.md";

pub const TRACE_COLUMNS: [&str; 8] = ["iter", "beta_ch", "beta_ih", "beta_cc", "beta_ic", "sigma", "alpha", "log_post"];
pub const BAND_COLUMNS: [&str; 7] = ["month", "mean_col", "lo_col", "hi_col", "mean_inf", "lo_inf", "hi_inf"];
pub const COMPARISON_COLUMNS: [&str; 7] = ["prior", "model_id", "active_params", "waic", "lppd", "p_waic", "sd_group"];

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::write(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::write(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::write(path, e))?;
    tmp.persist(path).map_err(|e| CliError::write(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::runtime(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::runtime(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::runtime(e.to_string()))
}

/// Shortest representation that parses back to the same value.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn active_names(mask: ModelMask) -> Vec<String> {
    mask.active_params().map(|p| p.name().to_string()).collect()
}

/// One row per retained draw, chains one after another; `iter` is the
/// sampler iteration. Masked rates are written as zero.
pub fn write_trace(path: &Path, chains: &[Chain], n_burnin: usize) -> Result<()> {
    let rows = chains.iter().flat_map(|c| c.draws.iter().enumerate()).map(|(i, d)| {
        let mut row = vec![(n_burnin + i + 1).to_string()];
        row.extend(d.params.to_array().iter().map(|&v| num(v)));
        row.push(num(d.log_post));
        row
    });
    write_atomic(path, &csv_bytes(&TRACE_COLUMNS, rows)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: u64,
    pub params: ModelParams,
    pub log_post: f64,
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != TRACE_COLUMNS {
        return Err(CliError::validation(format!(
            "{}: expected header `{}`",
            path.display(),
            TRACE_COLUMNS.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::validation(format!("{}: row {line}: {e}", path.display())))?;
        let cell = |k: usize| -> Result<f64> {
            rec[k].parse::<f64>().map_err(|_| {
                CliError::validation(format!(
                    "{}: row {line}, column `{}`: not a number",
                    path.display(),
                    TRACE_COLUMNS[k]
                ))
            })
        };
        let iter = rec[0].parse::<u64>().map_err(|_| {
            CliError::validation(format!("{}: row {line}, column `iter`: not an integer", path.display()))
        })?;
        let mut values = [0.0; 6];
        for (k, v) in values.iter_mut().enumerate() {
            *v = cell(k + 1)?;
        }
        out.push(TraceRow {
            iter,
            params: ModelParams::from_array(values),
            log_post: cell(7)?,
        });
    }
    if out.is_empty() {
        return Err(CliError::validation(format!("{}: no draws", path.display())));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ess: f64,
    pub ess_degenerate: bool,
    pub acceptance: f64,
    pub r_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub model_id: u8,
    pub active_params: Vec<String>,
    pub prior: String,
    pub seed: u64,
    pub months: usize,
    pub n_iter: usize,
    pub n_burnin: usize,
    pub n_chains: usize,
    pub n_draws: usize,
    pub params: Vec<ParamEntry>,
    pub latent_acceptance: f64,
    pub diagnostics: Vec<String>,
}

impl FitSummary {
    pub fn get(&self, name: &str) -> Option<&ParamEntry> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Posterior means as parameters; inactive rates are zero.
    pub fn posterior_means(&self) -> Result<ModelParams> {
        let mut p = ModelParams::default();
        for e in &self.params {
            let param = Param::from_name(&e.name)
                .ok_or_else(|| CliError::validation(format!("summary: unknown parameter `{}`", e.name)))?;
            p.set(param, e.mean);
        }
        Ok(p)
    }
}

pub const ACCEPTANCE_RANGE: (f64, f64) = (0.15, 0.6);
pub const MIN_ESS: f64 = 100.0;

pub fn fit_summary(
    summary: &PosteriorSummary,
    mask: ModelMask,
    prior: &str,
    months: usize,
    n_iter: usize,
    n_burnin: usize,
    n_chains: usize,
    seed: u64,
    r_hat: impl Fn(Param) -> Option<f64>,
) -> FitSummary {
    let mut diagnostics = Vec::new();
    let params = summary
        .params
        .iter()
        .map(|s| {
            let name = s.param.name().to_string();
            if s.acceptance < ACCEPTANCE_RANGE.0 || s.acceptance > ACCEPTANCE_RANGE.1 {
                diagnostics.push(format!("{name}: acceptance {:.3} outside [{}, {}]", s.acceptance, ACCEPTANCE_RANGE.0, ACCEPTANCE_RANGE.1));
            }
            if s.ess < MIN_ESS {
                diagnostics.push(format!("{name}: effective sample size {:.1} below {MIN_ESS}", s.ess));
            }
            let rh = r_hat(s.param);
            if let Some(r) = rh {
                if r > 1.1 {
                    diagnostics.push(format!("{name}: R-hat {r:.3} above 1.1"));
                }
            }
            ParamEntry {
                name,
                mean: s.mean,
                ci_low: s.ci_low,
                ci_high: s.ci_high,
                ess: s.ess,
                ess_degenerate: s.degenerate,
                acceptance: s.acceptance,
                r_hat: rh,
            }
        })
        .collect();
    FitSummary {
        model_id: mask.model_id().unwrap_or(0),
        active_params: active_names(mask),
        prior: prior.to_string(),
        seed,
        months,
        n_iter,
        n_burnin,
        n_chains,
        n_draws: summary.n_draws,
        params,
        latent_acceptance: summary.latent_acceptance,
        diagnostics,
    }
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let header = [
        "month", "s", "col_ha", "inf_ha", "col_ca", "inf_ca", "removed", "new_col_ha", "new_inf_ha", "new_col_ca",
        "new_inf_ca", "rem_col_ha", "rem_inf_ha", "rem_col_ca", "rem_inf_ca",
    ];
    let rows = traj.states.iter().enumerate().map(|(t, s)| {
        let mut row: Vec<String> = [t as u64, s.s, s.col_ha, s.inf_ha, s.col_ca, s.inf_ca, s.removed]
            .iter()
            .map(u64::to_string)
            .collect();
        match traj.events.get(t) {
            Some(e) => row.extend(
                [
                    e.new_col_ha,
                    e.new_inf_ha,
                    e.new_col_ca,
                    e.new_inf_ca,
                    e.rem_col_ha,
                    e.rem_inf_ha,
                    e.rem_col_ca,
                    e.rem_inf_ca,
                ]
                .iter()
                .map(u64::to_string),
            ),
            None => row.extend(std::iter::repeat_n(String::new(), 8)),
        }
        row
    });
    write_atomic(path, &csv_bytes(&header, rows)?)
}

pub fn write_band(path: &Path, summary: &ReplicateSummary) -> Result<()> {
    let rows = summary.months.iter().map(|m| {
        vec![
            m.month.to_string(),
            num(m.mean_col),
            num(m.lo_col),
            num(m.hi_col),
            num(m.mean_inf),
            num(m.lo_inf),
            num(m.hi_inf),
        ]
    });
    write_atomic(path, &csv_bytes(&BAND_COLUMNS, rows)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcReport {
    pub mae_colonization: f64,
    pub mae_infection: f64,
    pub coverage_fraction: f64,
    pub coverage_colonization: f64,
    pub coverage_infection: f64,
    pub n_rep: usize,
    pub months: usize,
    pub joint_rejections: u64,
    pub joint_rejection_rate: f64,
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn comparison_rows(table: &ComparisonTable, prior_labels: &[String]) -> Vec<Vec<String>> {
    table
        .rows
        .iter()
        .map(|r| {
            let label = prior_labels
                .get(r.prior_id - 1)
                .cloned()
                .unwrap_or_else(|| r.prior_id.to_string());
            let ok = r.result.as_ref().ok();
            vec![
                label,
                r.model_id.to_string(),
                active_names(r.mask).join(";"),
                opt(ok.map(|w| w.waic)),
                opt(ok.map(|w| w.lppd)),
                opt(ok.map(|w| w.p_waic)),
                opt(table.sd_by_prior.get(r.prior_id - 1).copied().flatten()),
            ]
        })
        .collect()
}

pub fn write_comparison(path: &Path, table: &ComparisonTable, prior_labels: &[String]) -> Result<()> {
    write_atomic(path, &csv_bytes(&COMPARISON_COLUMNS, comparison_rows(table, prior_labels))?)
}

/// A comparison row as read back from CSV; `waic` is `None` for a failed fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRecord {
    pub prior: String,
    pub model_id: u8,
    pub active_params: Vec<String>,
    pub waic: Option<f64>,
    pub lppd: Option<f64>,
    pub p_waic: Option<f64>,
    pub sd_group: Option<f64>,
}

pub fn read_comparison(path: &Path) -> Result<Vec<ComparisonRecord>> {
    let bad = |msg: String| CliError::validation(format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != COMPARISON_COLUMNS {
        return Err(bad(format!("expected header `{}`", COMPARISON_COLUMNS.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(format!("row {line}: {e}")))?;
        let f = |k: usize| -> Result<Option<f64>> {
            if rec[k].is_empty() {
                return Ok(None);
            }
            rec[k]
                .parse::<f64>()
                .map(Some)
                .map_err(|_| bad(format!("row {line}, column `{}`: not a number", COMPARISON_COLUMNS[k])))
        };
        out.push(ComparisonRecord {
            prior: rec[0].to_string(),
            model_id: rec[1]
                .parse()
                .map_err(|_| bad(format!("row {line}, column `model_id`: not an integer")))?,
            active_params: rec[2].split(';').filter(|s| !s.is_empty()).map(str::to_string).collect(),
            waic: f(3)?,
            lppd: f(4)?,
            p_waic: f(5)?,
            sd_group: f(6)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mrsa_core::inference::Draw;

    #[test]
    fn trace_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(TRACE_FILE);
        let params = ModelParams {
            beta_ch: 0.1 + 0.2,
            beta_ih: 0.0,
            beta_cc: 1e-300,
            beta_ic: 0.0407,
            sigma: 0.01,
            alpha: 1.0 / 3.0,
        };
        let chain = Chain {
            draws: vec![Draw {
                params,
                log_lik: -1.0,
                log_post: -12.345678901234567,
            }],
            latents: Vec::new(),
            acceptance: [None; 6],
            latent_acceptance: 0.0,
            proposal_scales: [0.5; 6],
            mask: ModelMask::FULL,
            seed: 1,
            months: 1,
        };
        write_trace(&path, &[chain], 10).unwrap();
        let rows = read_trace(&path).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].iter, 11);
        assert_eq!(rows[0].params, params);
        assert_eq!(rows[0].log_post, -12.345678901234567);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/x.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
