//! Chain-binomial log-likelihood of an observed monthly series, given the
//! latent isolation counts that the surveillance data does not record.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::model::{
    apply_mask, colonization_probability, hazard_to_probability, step_compartments,
    CompartmentState, Count, EventCounts, ExogenousFlows, FixedRates, ModelError, ModelMask,
    ModelParams,
};
use crate::simulate::Trajectory;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LikelihoodError {
    #[error("binomial domain error: k={k}, n={n}, p={p}")]
    Domain { k: Count, n: Count, p: f64 },
    #[error("series length mismatch: {what} has {got} months, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("month {month} is infeasible: {source}")]
    Infeasible { month: usize, source: ModelError },
    #[error("parameters must be finite and non-negative")]
    InvalidParams,
    #[error("initial removed count must be zero, got {0}")]
    NonZeroInitialRemoved(Count),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One binomial summand group of the log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    /// New HA colonizations out of the susceptibles.
    Colonization,
    /// New HA infections out of the HA-colonized.
    Infection,
    RemovalColHa,
    RemovalInfHa,
    RemovalColCa,
    RemovalInfCa,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Colonization,
        Channel::Infection,
        Channel::RemovalColHa,
        Channel::RemovalInfHa,
        Channel::RemovalColCa,
        Channel::RemovalInfCa,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Colonization => "SC_h",
            Channel::Infection => "C_hI_h",
            Channel::RemovalColHa => "C_hR",
            Channel::RemovalInfHa => "I_hR",
            Channel::RemovalColCa => "C_cR",
            Channel::RemovalInfCa => "I_cR",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The four isolation flows, in the order `R*_1..R*_4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Removal {
    ColHa,
    InfHa,
    ColCa,
    InfCa,
}

impl Removal {
    pub const ALL: [Removal; 4] = [Removal::ColHa, Removal::InfHa, Removal::ColCa, Removal::InfCa];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn channel(self) -> Channel {
        Channel::ALL[self.index() + 2]
    }
}

/// Observed monthly series plus the initial census.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedDataset {
    pub init: CompartmentState,
    pub new_col_ha: Vec<Count>,
    pub new_inf_ha: Vec<Count>,
    pub new_col_ca: Vec<Count>,
    pub new_inf_ca: Vec<Count>,
    pub flows: Vec<ExogenousFlows>,
}

impl ObservedDataset {
    /// A dataset with no observed months.
    pub fn empty(init: CompartmentState) -> Self {
        ObservedDataset {
            init,
            new_col_ha: Vec::new(),
            new_inf_ha: Vec::new(),
            new_col_ca: Vec::new(),
            new_inf_ca: Vec::new(),
            flows: Vec::new(),
        }
    }

    pub fn months(&self) -> usize {
        self.new_col_ha.len()
    }

    pub fn validate(&self) -> Result<(), LikelihoodError> {
        let expected = self.months();
        for (what, got) in [
            ("new_inf_ha", self.new_inf_ha.len()),
            ("new_col_ca", self.new_col_ca.len()),
            ("new_inf_ca", self.new_inf_ca.len()),
            ("flows", self.flows.len()),
        ] {
            if got != expected {
                return Err(LikelihoodError::LengthMismatch {
                    what,
                    got,
                    expected,
                });
            }
        }
        if self.init.removed != 0 {
            return Err(LikelihoodError::NonZeroInitialRemoved(self.init.removed));
        }
        Ok(())
    }

    /// Month `t` (0-based) events, completed with the latent removals.
    pub fn events(&self, t: usize, latents: &LatentRemovals) -> EventCounts {
        EventCounts {
            new_col_ha: self.new_col_ha[t],
            new_inf_ha: self.new_inf_ha[t],
            new_col_ca: self.new_col_ca[t],
            new_inf_ca: self.new_inf_ca[t],
            rem_col_ha: latents.get(Removal::ColHa, t),
            rem_inf_ha: latents.get(Removal::InfHa, t),
            rem_col_ca: latents.get(Removal::ColCa, t),
            rem_inf_ca: latents.get(Removal::InfCa, t),
        }
    }

    /// The observed months `range` as a new dataset starting from `init`.
    pub fn with_months(&self, months: usize) -> ObservedDataset {
        ObservedDataset {
            init: self.init,
            new_col_ha: self.new_col_ha[..months].to_vec(),
            new_inf_ha: self.new_inf_ha[..months].to_vec(),
            new_col_ca: self.new_col_ca[..months].to_vec(),
            new_inf_ca: self.new_inf_ca[..months].to_vec(),
            flows: self.flows[..months].to_vec(),
        }
    }
}

/// Unobserved isolation counts `R*_{1..4,t}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatentRemovals {
    series: [Vec<Count>; 4],
}

impl LatentRemovals {
    pub fn zeros(months: usize) -> Self {
        LatentRemovals {
            series: core::array::from_fn(|_| alloc::vec![0; months]),
        }
    }

    pub fn from_series(
        rem_col_ha: Vec<Count>,
        rem_inf_ha: Vec<Count>,
        rem_col_ca: Vec<Count>,
        rem_inf_ca: Vec<Count>,
    ) -> Result<Self, LikelihoodError> {
        let expected = rem_col_ha.len();
        for (what, got) in [
            ("rem_inf_ha", rem_inf_ha.len()),
            ("rem_col_ca", rem_col_ca.len()),
            ("rem_inf_ca", rem_inf_ca.len()),
        ] {
            if got != expected {
                return Err(LikelihoodError::LengthMismatch {
                    what,
                    got,
                    expected,
                });
            }
        }
        Ok(LatentRemovals {
            series: [rem_col_ha, rem_inf_ha, rem_col_ca, rem_inf_ca],
        })
    }

    pub fn months(&self) -> usize {
        self.series[0].len()
    }

    #[inline]
    pub fn get(&self, which: Removal, t: usize) -> Count {
        self.series[which.index()][t]
    }

    #[inline]
    pub fn set(&mut self, which: Removal, t: usize, value: Count) {
        self.series[which.index()][t] = value;
    }

    pub fn series(&self, which: Removal) -> &[Count] {
        &self.series[which.index()]
    }
}

/// Log-likelihood contributions, one row per month and one column per
/// [`Channel`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseLogLik {
    months: usize,
    values: Vec<f64>,
    impossible: Vec<(usize, Channel)>,
}

impl PointwiseLogLik {
    pub const CHANNELS: usize = 6;

    /// Builds a matrix from row-major values (`months * 6`).
    pub fn from_values(months: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), months * Self::CHANNELS);
        let impossible = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == f64::NEG_INFINITY)
            .map(|(i, _)| (i / Self::CHANNELS, Channel::ALL[i % Self::CHANNELS]))
            .collect();
        PointwiseLogLik {
            months,
            values,
            impossible,
        }
    }

    pub fn months(&self) -> usize {
        self.months
    }

    pub fn get(&self, month: usize, channel: Channel) -> f64 {
        self.values[month * Self::CHANNELS + channel.index()]
    }

    /// Row-major view.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cells whose event is impossible under the parameters.
    pub fn impossible(&self) -> &[(usize, Channel)] {
        &self.impossible
    }

    /// Left-to-right sum in row-major order.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `ln Bin(k; n, p)` with `0 * ln 0 = 0`; `-inf` for an impossible outcome.
pub fn log_binomial_pmf(k: Count, n: Count, p: f64) -> Result<f64, LikelihoodError> {
    if k > n || !(0.0..=1.0).contains(&p) {
        return Err(LikelihoodError::Domain { k, n, p });
    }
    Ok(log_binomial_unchecked(
        k,
        n,
        libm::log(p),
        libm::log1p(-p),
        stats::ln_choose(n, k),
    ))
}

/// Shared kernel: `ln C(n,k) + k ln p + (n-k) ln(1-p)` with the zero conventions.
#[inline]
pub(crate) fn log_binomial_unchecked(k: Count, n: Count, ln_p: f64, ln_q: f64, ln_choose: f64) -> f64 {
    let mut v = ln_choose;
    if k > 0 {
        v += k as f64 * ln_p;
    }
    if n > k {
        v += (n - k) as f64 * ln_q;
    }
    v
}

/// Applies the difference equations to the observed events completed by
/// `latents`.
pub fn reconstruct_trajectory(
    data: &ObservedDataset,
    latents: &LatentRemovals,
) -> Result<Trajectory, LikelihoodError> {
    data.validate()?;
    if latents.months() != data.months() {
        return Err(LikelihoodError::LengthMismatch {
            what: "latent removals",
            got: latents.months(),
            expected: data.months(),
        });
    }
    let mut states = Vec::with_capacity(data.months() + 1);
    let mut events = Vec::with_capacity(data.months());
    let mut state = data.init;
    states.push(state);
    for t in 0..data.months() {
        let ev = data.events(t, latents);
        state = step_compartments(&state, &ev, &data.flows[t])
            .map_err(|source| LikelihoodError::Infeasible { month: t + 1, source })?;
        states.push(state);
        events.push(ev);
    }
    Ok(Trajectory {
        states,
        events,
        joint_rejections: 0,
    })
}

/// Transition probabilities that do not depend on the census.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FixedProbabilities {
    pub infection: f64,
    pub removal: [f64; 4],
}

impl FixedProbabilities {
    pub fn new(params: &ModelParams, fixed: &FixedRates) -> Result<Self, ModelError> {
        Ok(FixedProbabilities {
            infection: hazard_to_probability(params.alpha)?,
            removal: [
                hazard_to_probability(fixed.rho1)?,
                hazard_to_probability(fixed.rho2)?,
                hazard_to_probability(fixed.rho3)?,
                hazard_to_probability(fixed.rho4)?,
            ],
        })
    }
}

/// Eligible pool for each removal flow.
pub(crate) fn removal_pool(state: &CompartmentState, which: Removal) -> Count {
    match which {
        Removal::ColHa => state.col_ha,
        Removal::InfHa => state.inf_ha,
        Removal::ColCa => state.col_ca,
        Removal::InfCa => state.inf_ca,
    }
}

/// Log-likelihood contribution of every (month, channel) cell.
pub fn pointwise_log_likelihood(
    data: &ObservedDataset,
    latents: &LatentRemovals,
    params: &ModelParams,
    fixed: &FixedRates,
    mask: ModelMask,
) -> Result<PointwiseLogLik, LikelihoodError> {
    if !params.is_valid() {
        return Err(LikelihoodError::InvalidParams);
    }
    fixed.validate()?;
    let traj = reconstruct_trajectory(data, latents)?;
    let params = apply_mask(*params, mask);
    let probs = FixedProbabilities::new(&params, fixed)?;

    let mut values = Vec::with_capacity(data.months() * PointwiseLogLik::CHANNELS);
    for (t, ev) in traj.events.iter().enumerate() {
        let st = &traj.states[t];
        let p_col = colonization_probability(st, &params, mask)?;
        values.push(log_binomial_pmf(ev.new_col_ha, st.s, p_col)?);
        values.push(log_binomial_pmf(ev.new_inf_ha, st.col_ha, probs.infection)?);
        let removed = [ev.rem_col_ha, ev.rem_inf_ha, ev.rem_col_ca, ev.rem_inf_ca];
        for which in Removal::ALL {
            let i = which.index();
            values.push(log_binomial_pmf(
                removed[i],
                removal_pool(st, which),
                probs.removal[i],
            )?);
        }
    }
    Ok(PointwiseLogLik::from_values(data.months(), values))
}

/// Total log-likelihood; `-inf` when any cell is impossible.
pub fn log_likelihood(
    data: &ObservedDataset,
    latents: &LatentRemovals,
    params: &ModelParams,
    fixed: &FixedRates,
    mask: ModelMask,
) -> Result<f64, LikelihoodError> {
    let pw = pointwise_log_likelihood(data, latents, params, fixed, mask)?;
    if !pw.impossible().is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(pw.total())
}
