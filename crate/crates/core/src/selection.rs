//! WAIC, the fifteen-model comparison lattice, prediction error and the
//! Kruskal–Wallis test.

use alloc::vec::Vec;

use thiserror::Error;

use crate::inference::{rwmh_sample_with, DrawSink, InferenceError, McmcConfig, PriorSpec};
use crate::likelihood::{Channel, ObservedDataset, PointwiseLogLik};
use crate::model::{Count, FixedRates, ModelMask, ModelParams, MODEL_COUNT};
use crate::stats::{chi_squared_sf, mean, mid_ranks, sample_variance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("need at least {needed} {what}, got {got}")]
    TooFew { what: &'static str, needed: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("draw {draw} has an impossible point at month {month}, channel {channel:?}")]
    ImpossiblePoint { draw: usize, month: usize, channel: Channel },
    #[error("non-finite value in sample")]
    NonFinite,
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaicResult {
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
    /// `-2 * (lppd_i - p_waic_i)` per cell, row-major over months and channels.
    pub pointwise: Vec<f64>,
    pub n_draws: usize,
}

/// Streaming WAIC over a fixed set of points: an online log-sum-exp and a
/// Welford variance per point.
#[derive(Debug, Clone)]
pub struct WaicAccumulator {
    n_points: usize,
    n_draws: usize,
    max: Vec<f64>,
    scaled_sum: Vec<f64>,
    mean: Vec<f64>,
    m2: Vec<f64>,
    error: Option<SelectionError>,
}

impl WaicAccumulator {
    pub fn new(n_points: usize) -> Self {
        WaicAccumulator {
            n_points,
            n_draws: 0,
            max: alloc::vec![f64::NEG_INFINITY; n_points],
            scaled_sum: alloc::vec![0.0; n_points],
            mean: alloc::vec![0.0; n_points],
            m2: alloc::vec![0.0; n_points],
            error: None,
        }
    }

    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    /// Adds one draw's pointwise values. After the first error further draws
    /// are ignored and `finish` reports it.
    pub fn push(&mut self, values: &[f64]) {
        if self.error.is_some() {
            return;
        }
        if values.len() != self.n_points {
            self.error = Some(SelectionError::LengthMismatch {
                left: self.n_points,
                right: values.len(),
            });
            return;
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let channel = Channel::ALL[i % PointwiseLogLik::CHANNELS];
            self.error = Some(SelectionError::ImpossiblePoint {
                draw: self.n_draws,
                month: i / PointwiseLogLik::CHANNELS + 1,
                channel,
            });
            return;
        }
        self.n_draws += 1;
        let n = self.n_draws as f64;
        for (i, &v) in values.iter().enumerate() {
            if v > self.max[i] {
                self.scaled_sum[i] = self.scaled_sum[i] * libm::exp(self.max[i] - v) + 1.0;
                self.max[i] = v;
            } else {
                self.scaled_sum[i] += libm::exp(v - self.max[i]);
            }
            let d = v - self.mean[i];
            self.mean[i] += d / n;
            self.m2[i] += d * (v - self.mean[i]);
        }
    }

    pub fn finish(&self) -> Result<WaicResult, SelectionError> {
        if let Some(e) = &self.error {
            return Err(e.clone());
        }
        if self.n_draws < 2 {
            return Err(SelectionError::TooFew {
                what: "posterior draws",
                needed: 2,
                got: self.n_draws,
            });
        }
        let s = self.n_draws as f64;
        let mut lppd = 0.0;
        let mut p_waic = 0.0;
        let mut pointwise = Vec::with_capacity(self.n_points);
        for i in 0..self.n_points {
            let l = self.max[i] + libm::log(self.scaled_sum[i] / s);
            let v = (self.m2[i] / (s - 1.0)).max(0.0);
            lppd += l;
            p_waic += v;
            pointwise.push(-2.0 * (l - v));
        }
        Ok(WaicResult {
            waic: -2.0 * (lppd - p_waic),
            lppd,
            p_waic,
            pointwise,
            n_draws: self.n_draws,
        })
    }
}

impl DrawSink for WaicAccumulator {
    fn record(&mut self, _: usize, _: &ModelParams, pointwise: &[f64]) {
        self.push(pointwise);
    }
}

pub fn waic(draws: &[PointwiseLogLik]) -> Result<WaicResult, SelectionError> {
    let first = draws.first().ok_or(SelectionError::TooFew {
        what: "posterior draws",
        needed: 2,
        got: 0,
    })?;
    let mut acc = WaicAccumulator::new(first.values().len());
    for d in draws {
        acc.push(d.values());
    }
    acc.finish()
}

/// The fifteen sub-models in table order (model ids 1 to 15).
pub fn enumerate_models() -> Vec<ModelMask> {
    (1..=MODEL_COUNT as u8)
        .map(|id| ModelMask::from_model_id(id).expect("ids 1..=15 are defined"))
        .collect()
}

/// Fits one model and scores it, streaming every retained draw into WAIC.
pub fn fit_and_score(
    data: &ObservedDataset,
    fixed: &FixedRates,
    mask: ModelMask,
    prior: &PriorSpec,
    mcmc: &McmcConfig,
) -> Result<WaicResult, SelectionError> {
    let mut acc = WaicAccumulator::new(data.months() * PointwiseLogLik::CHANNELS);
    rwmh_sample_with(data, fixed, mask, prior, mcmc, &mut acc)?;
    acc.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    /// 1-based position of the prior in the list passed to the comparison.
    pub prior_id: usize,
    pub model_id: u8,
    pub mask: ModelMask,
    pub result: Result<WaicResult, SelectionError>,
}

impl ComparisonRow {
    pub fn waic(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.waic)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    /// Grouped by prior; ascending WAIC within each group, failed fits last.
    pub rows: Vec<ComparisonRow>,
    /// Sample standard deviation of the successful WAIC values of each prior.
    pub sd_by_prior: Vec<Option<f64>>,
}

impl ComparisonTable {
    pub fn from_rows(mut rows: Vec<ComparisonRow>) -> Self {
        rows.sort_by(|a, b| {
            a.prior_id.cmp(&b.prior_id).then_with(|| match (a.waic(), b.waic()) {
                (Some(x), Some(y)) => x.total_cmp(&y),
                (Some(_), None) => core::cmp::Ordering::Less,
                (None, Some(_)) => core::cmp::Ordering::Greater,
                (None, None) => a.model_id.cmp(&b.model_id),
            })
        });
        let n_priors = rows.iter().map(|r| r.prior_id).max().unwrap_or(0);
        let sd_by_prior = (1..=n_priors)
            .map(|p| {
                let values: Vec<f64> = rows.iter().filter(|r| r.prior_id == p).filter_map(ComparisonRow::waic).collect();
                (values.len() >= 2).then(|| libm::sqrt(sample_variance(&values)))
            })
            .collect();
        ComparisonTable { rows, sd_by_prior }
    }

    pub fn rows_for_prior(&self, prior_id: usize) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(move |r| r.prior_id == prior_id)
    }

    pub fn get(&self, prior_id: usize, model_id: u8) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.prior_id == prior_id && r.model_id == model_id)
    }
}

/// Fits all fifteen models under every prior, one after another.
pub fn compare_models(
    data: &ObservedDataset,
    fixed: &FixedRates,
    priors: &[PriorSpec],
    mcmc: &McmcConfig,
) -> ComparisonTable {
    let mut rows = Vec::with_capacity(priors.len() * MODEL_COUNT);
    for (i, prior) in priors.iter().enumerate() {
        for mask in enumerate_models() {
            rows.push(ComparisonRow {
                prior_id: i + 1,
                model_id: mask.model_id().expect("lattice masks have ids"),
                mask,
                result: fit_and_score(data, fixed, mask, prior, mcmc),
            });
        }
    }
    ComparisonTable::from_rows(rows)
}

pub fn mean_absolute_error(observed: &[Count], predicted: &[f64]) -> Result<f64, SelectionError> {
    if observed.len() != predicted.len() {
        return Err(SelectionError::LengthMismatch {
            left: observed.len(),
            right: predicted.len(),
        });
    }
    if observed.is_empty() {
        return Err(SelectionError::TooFew {
            what: "observations",
            needed: 1,
            got: 0,
        });
    }
    let errs: Vec<f64> = observed.iter().zip(predicted).map(|(&o, &p)| libm::fabs(o as f64 - p)).collect();
    Ok(mean(&errs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KruskalWallis {
    pub h: f64,
    pub p_value: f64,
    pub dof: usize,
}

/// Tie-corrected H with a chi-squared p-value on `k - 1` degrees of freedom.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KruskalWallis, SelectionError> {
    if groups.len() < 2 {
        return Err(SelectionError::TooFew {
            what: "groups",
            needed: 2,
            got: groups.len(),
        });
    }
    if let Some(g) = groups.iter().find(|g| g.is_empty()) {
        return Err(SelectionError::TooFew {
            what: "values per group",
            needed: 1,
            got: g.len(),
        });
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(SelectionError::NonFinite);
    }
    let ranks = mid_ranks(&pooled);
    let n = pooled.len() as f64;
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let raw = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    let correction = 1.0 - ties / (n * n * n - n);
    let dof = groups.len() - 1;
    if correction <= 0.0 {
        return Ok(KruskalWallis { h: 0.0, p_value: 1.0, dof });
    }
    let h = (raw / correction).max(0.0);
    Ok(KruskalWallis {
        h,
        p_value: chi_squared_sf(h, dof as f64),
        dof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Param;

    fn one_point(values: &[f64]) -> Vec<PointwiseLogLik> {
        // one month, pad the other five channels with zeros
        values
            .iter()
            .map(|&v| PointwiseLogLik::from_values(1, alloc::vec![v, 0.0, 0.0, 0.0, 0.0, 0.0]))
            .collect()
    }

    #[test]
    fn two_draw_closed_form() {
        let r = waic(&one_point(&[libm::log(0.5), libm::log(0.25)])).unwrap();
        assert!((r.lppd - libm::log(0.375)).abs() < 1e-15);
        let d = libm::log(2.0);
        // (S - 1) denominator: ((d/2)^2 * 2) / 1
        assert!((r.p_waic - d * d / 2.0).abs() < 1e-15);
        assert!((r.waic + 2.0 * (r.lppd - r.p_waic)).abs() < 1e-15);
        assert_eq!(r.pointwise.len(), 6);
    }

    #[test]
    fn repeated_draw_has_no_penalty() {
        let rows: Vec<PointwiseLogLik> = (0..5)
            .map(|_| PointwiseLogLik::from_values(1, alloc::vec![-1.5, -0.5, -2.0, -0.25, 0.0, -3.0]))
            .collect();
        let r = waic(&rows).unwrap();
        assert_eq!(r.p_waic, 0.0);
        assert!((r.waic - 2.0 * 7.25).abs() < 1e-12);
    }

    #[test]
    fn waic_errors() {
        assert!(matches!(waic(&one_point(&[-1.0])), Err(SelectionError::TooFew { .. })));
        let err = waic(&one_point(&[-1.0, f64::NEG_INFINITY])).unwrap_err();
        assert_eq!(
            err,
            SelectionError::ImpossiblePoint {
                draw: 1,
                month: 1,
                channel: Channel::Colonization
            }
        );
    }

    #[test]
    fn large_magnitudes_do_not_underflow() {
        let r = waic(&one_point(&[-1000.0, -1001.0, -1000.5])).unwrap();
        let expect = -1000.0 + libm::log((1.0 + libm::exp(-1.0) + libm::exp(-0.5)) / 3.0);
        assert!((r.lppd - expect).abs() < 1e-12);
    }

    #[test]
    fn per_point_shift_moves_every_model_equally() {
        let a = one_point(&[-1.0, -1.4, -0.8]);
        let b = one_point(&[-1.1, -1.0, -1.2]);
        let shift = |rows: &[PointwiseLogLik]| -> Vec<PointwiseLogLik> {
            rows.iter()
                .map(|r| PointwiseLogLik::from_values(1, r.values().iter().map(|v| v - 7.0).collect()))
                .collect()
        };
        let (wa, wb) = (waic(&a).unwrap().waic, waic(&b).unwrap().waic);
        let (sa, sb) = (waic(&shift(&a)).unwrap().waic, waic(&shift(&b)).unwrap().waic);
        assert_eq!(wa < wb, sa < sb);
        assert!(((sa - wa) - (sb - wb)).abs() < 1e-9);
    }

    #[test]
    fn lattice_order() {
        let models = enumerate_models();
        assert_eq!(models.len(), 15);
        assert_eq!(models[14], ModelMask::FULL);
        let m5 = models[4];
        assert!(m5.is_active(Param::BetaCh) && m5.is_active(Param::BetaIh));
        assert!(!m5.is_active(Param::BetaCc) && !m5.is_active(Param::BetaIc));
        for (i, m) in models.iter().enumerate() {
            assert_eq!(m.model_id(), Some(i as u8 + 1));
        }
    }

    fn row(prior_id: usize, model_id: u8, waic: Option<f64>) -> ComparisonRow {
        ComparisonRow {
            prior_id,
            model_id,
            mask: ModelMask::from_model_id(model_id).unwrap(),
            result: match waic {
                Some(w) => Ok(WaicResult {
                    waic: w,
                    lppd: -w / 2.0,
                    p_waic: 0.0,
                    pointwise: Vec::new(),
                    n_draws: 2,
                }),
                None => Err(SelectionError::NonFinite),
            },
        }
    }

    #[test]
    fn table_sorting_and_spread() {
        let t = ComparisonTable::from_rows(alloc::vec![
            row(2, 1, Some(5.0)),
            row(1, 3, None),
            row(1, 1, Some(12.0)),
            row(1, 2, Some(10.0)),
            row(2, 2, Some(4.0)),
        ]);
        let order: Vec<(usize, u8)> = t.rows.iter().map(|r| (r.prior_id, r.model_id)).collect();
        assert_eq!(order, [(1, 2), (1, 1), (1, 3), (2, 2), (2, 1)]);
        assert!((t.sd_by_prior[0].unwrap() - libm::sqrt(2.0)).abs() < 1e-12);
        assert!((t.sd_by_prior[1].unwrap() - libm::sqrt(0.5)).abs() < 1e-12);
        assert_eq!(t.get(1, 3).unwrap().waic(), None);
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mean_absolute_error(&[4, 5], &[4.0, 5.0]).unwrap(), 0.0);
        let m = mean_absolute_error(&[1, 2, 3], &[2.0, 2.0, 2.0]).unwrap();
        assert!((m - 2.0 / 3.0).abs() < 1e-15);
        assert!(mean_absolute_error(&[1], &[1.0, 2.0]).is_err());
        assert!(mean_absolute_error(&[], &[]).is_err());
    }

    #[test]
    fn kruskal_wallis_examples() {
        let r = kruskal_wallis(&[alloc::vec![1.0, 2.0, 3.0], alloc::vec![4.0, 5.0, 6.0]]).unwrap();
        assert!((r.h - 27.0 / 7.0).abs() < 1e-12);
        assert!((r.p_value - 0.049_534_613_4).abs() < 1e-9, "{}", r.p_value);
        assert!(kruskal_wallis(&[alloc::vec![1.0]]).is_err());
        assert!(kruskal_wallis(&[alloc::vec![1.0], alloc::vec![]]).is_err());
        let tied = kruskal_wallis(&[alloc::vec![2.0, 2.0], alloc::vec![2.0]]).unwrap();
        assert_eq!(tied.p_value, 1.0);
    }

    #[test]
    fn tie_correction_raises_h() {
        let g = [alloc::vec![1.0, 1.0, 2.0], alloc::vec![2.0, 3.0, 3.0]];
        let r = kruskal_wallis(&g).unwrap();
        // ranks 1.5 1.5 3.5 | 3.5 5.5 5.5; sums 6.5 and 14.5
        let raw = 12.0 / 42.0 * (6.5 * 6.5 / 3.0 + 14.5 * 14.5 / 3.0) - 21.0;
        let corr = 1.0 - 3.0 * 6.0 / 210.0;
        assert!((r.h - raw / corr).abs() < 1e-12);
    }
}
