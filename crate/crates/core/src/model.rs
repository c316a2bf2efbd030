//! Compartment census, parameters, transition probabilities and the monthly
//! difference equations of the hospital MRSA chain-binomial model.
//!
//! Everything here is a plain value type or a pure function; simulation and
//! inference both build on these definitions.

use core::fmt;

use thiserror::Error;

/// Count type for every census and event quantity.
pub type Count = u64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("total population is zero; transmission probability is undefined")]
    DegeneratePopulation,
    #[error("rate must be finite and non-negative, got {0}")]
    InvalidRate(f64),
    #[error("infeasible step: {equation} would become negative ({value})")]
    Infeasible { equation: Equation, value: i128 },
    #[error("events are not feasible against the source state: {0}")]
    InfeasibleEvents(&'static str),
    #[error("model id must be in 1..=15, got {0}")]
    UnknownModel(u8),
    #[error("a model mask needs at least one active transmission term")]
    EmptyMask,
}

/// One of the six difference equations, used to locate infeasibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    Susceptible,
    ColonizedHa,
    InfectedHa,
    ColonizedCa,
    InfectedCa,
    Removed,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::Susceptible => "S",
            Equation::ColonizedHa => "C_h",
            Equation::InfectedHa => "I_h",
            Equation::ColonizedCa => "C_c",
            Equation::InfectedCa => "I_c",
            Equation::Removed => "R",
        })
    }
}

/// Census of the six tracked compartments at the start of one month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct CompartmentState {
    pub s: Count,
    pub col_ha: Count,
    pub inf_ha: Count,
    pub col_ca: Count,
    pub inf_ca: Count,
    pub removed: Count,
}

impl CompartmentState {
    pub fn total(&self) -> Count {
        self.s + self.col_ha + self.inf_ha + self.col_ca + self.inf_ca + self.removed
    }
}

/// Transition counts for one month.
///
/// `new_col_ca` and `new_inf_ca` are community arrivals; they enter from
/// outside the tracked susceptible pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct EventCounts {
    pub new_col_ha: Count,
    pub new_inf_ha: Count,
    pub new_col_ca: Count,
    pub new_inf_ca: Count,
    pub rem_col_ha: Count,
    pub rem_inf_ha: Count,
    pub rem_col_ca: Count,
    pub rem_inf_ca: Count,
}

impl EventCounts {
    /// Checks the per-compartment outflow limits against `state`.
    pub fn check_feasible(&self, state: &CompartmentState) -> Result<(), ModelError> {
        if self.new_col_ha > state.s {
            return Err(ModelError::InfeasibleEvents("new_col_ha exceeds s"));
        }
        if self.new_inf_ha + self.rem_col_ha > state.col_ha {
            return Err(ModelError::InfeasibleEvents(
                "new_inf_ha + rem_col_ha exceeds col_ha",
            ));
        }
        if self.rem_inf_ha > state.inf_ha {
            return Err(ModelError::InfeasibleEvents("rem_inf_ha exceeds inf_ha"));
        }
        if self.rem_col_ca > state.col_ca {
            return Err(ModelError::InfeasibleEvents("rem_col_ca exceeds col_ca"));
        }
        if self.rem_inf_ca > state.inf_ca {
            return Err(ModelError::InfeasibleEvents("rem_inf_ca exceeds inf_ca"));
        }
        Ok(())
    }

    pub fn total_removed(&self) -> Count {
        self.rem_col_ha + self.rem_inf_ha + self.rem_col_ca + self.rem_inf_ca
    }
}

/// Admissions and discharges during one month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ExogenousFlows {
    pub admissions: Count,
    pub discharges: Count,
}

/// Identifies one component of the estimated parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    BetaCh,
    BetaIh,
    BetaCc,
    BetaIc,
    Sigma,
    Alpha,
}

impl Param {
    /// Declared parameter order, used by every file format.
    pub const ALL: [Param; 6] = [
        Param::BetaCh,
        Param::BetaIh,
        Param::BetaCc,
        Param::BetaIc,
        Param::Sigma,
        Param::Alpha,
    ];

    pub const BETAS: [Param; 4] = [Param::BetaCh, Param::BetaIh, Param::BetaCc, Param::BetaIc];

    pub fn name(self) -> &'static str {
        match self {
            Param::BetaCh => "beta_ch",
            Param::BetaIh => "beta_ih",
            Param::BetaCc => "beta_cc",
            Param::BetaIc => "beta_ic",
            Param::Sigma => "sigma",
            Param::Alpha => "alpha",
        }
    }

    pub fn from_name(name: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_beta(self) -> bool {
        self.index() < 4
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Estimated rates, all per month.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModelParams {
    pub beta_ch: f64,
    pub beta_ih: f64,
    pub beta_cc: f64,
    pub beta_ic: f64,
    pub sigma: f64,
    pub alpha: f64,
}

impl ModelParams {
    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::BetaCh => self.beta_ch,
            Param::BetaIh => self.beta_ih,
            Param::BetaCc => self.beta_cc,
            Param::BetaIc => self.beta_ic,
            Param::Sigma => self.sigma,
            Param::Alpha => self.alpha,
        }
    }

    pub fn set(&mut self, p: Param, value: f64) {
        match p {
            Param::BetaCh => self.beta_ch = value,
            Param::BetaIh => self.beta_ih = value,
            Param::BetaCc => self.beta_cc = value,
            Param::BetaIc => self.beta_ic = value,
            Param::Sigma => self.sigma = value,
            Param::Alpha => self.alpha = value,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        Param::ALL.map(|p| self.get(p))
    }

    pub fn from_array(values: [f64; 6]) -> Self {
        let mut out = ModelParams::default();
        for (p, v) in Param::ALL.into_iter().zip(values) {
            out.set(p, v);
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Inverse mean months to isolation for the four MRSA compartments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedRates {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub rho4: f64,
}

impl Default for FixedRates {
    fn default() -> Self {
        FixedRates {
            rho1: 1.3,
            rho2: 1.3,
            rho3: 10.0,
            rho4: 10.0,
        }
    }
}

impl FixedRates {
    pub fn validate(&self) -> Result<(), ModelError> {
        for r in [self.rho1, self.rho2, self.rho3, self.rho4] {
            // +inf is accepted: it is the certain-isolation limit.
            if r.is_nan() || r <= 0.0 {
                return Err(ModelError::InvalidRate(r));
            }
        }
        Ok(())
    }
}

/// Which transmission terms are free in a sub-model. `sigma` and `alpha`
/// are always estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelMask {
    pub ch_active: bool,
    pub ih_active: bool,
    pub cc_active: bool,
    pub ic_active: bool,
}

pub const MODEL_COUNT: usize = 15;

/// Active-term sets in the row order of the sub-model table (ids 1..=15),
/// as `[ch, ih, cc, ic]`.
const MODEL_TABLE: [[bool; 4]; MODEL_COUNT] = [
    [true, false, false, false],
    [false, true, false, false],
    [false, false, true, false],
    [false, false, false, true],
    [true, true, false, false],
    [false, false, true, true],
    [true, false, true, false],
    [false, true, false, true],
    [true, false, false, true],
    [false, true, true, false],
    [true, true, true, false],
    [true, false, true, true],
    [true, true, false, true],
    [false, true, true, true],
    [true, true, true, true],
];

impl ModelMask {
    pub const FULL: ModelMask = ModelMask {
        ch_active: true,
        ih_active: true,
        cc_active: true,
        ic_active: true,
    };

    pub fn new(ch: bool, ih: bool, cc: bool, ic: bool) -> Result<Self, ModelError> {
        if !(ch || ih || cc || ic) {
            return Err(ModelError::EmptyMask);
        }
        Ok(ModelMask {
            ch_active: ch,
            ih_active: ih,
            cc_active: cc,
            ic_active: ic,
        })
    }

    pub fn from_model_id(id: u8) -> Result<Self, ModelError> {
        if !(1..=15).contains(&id) {
            return Err(ModelError::UnknownModel(id));
        }
        let [ch, ih, cc, ic] = MODEL_TABLE[usize::from(id - 1)];
        Ok(ModelMask {
            ch_active: ch,
            ih_active: ih,
            cc_active: cc,
            ic_active: ic,
        })
    }

    pub fn model_id(&self) -> Option<u8> {
        let key = [self.ch_active, self.ih_active, self.cc_active, self.ic_active];
        MODEL_TABLE
            .iter()
            .position(|row| *row == key)
            .map(|i| i as u8 + 1)
    }

    pub fn is_active(&self, p: Param) -> bool {
        match p {
            Param::BetaCh => self.ch_active,
            Param::BetaIh => self.ih_active,
            Param::BetaCc => self.cc_active,
            Param::BetaIc => self.ic_active,
            Param::Sigma | Param::Alpha => true,
        }
    }

    /// Active parameters in declared order.
    pub fn active_params(&self) -> impl Iterator<Item = Param> + '_ {
        Param::ALL.into_iter().filter(|p| self.is_active(*p))
    }

    pub fn n_active_betas(&self) -> usize {
        Param::BETAS.iter().filter(|p| self.is_active(**p)).count()
    }
}

impl Default for ModelMask {
    fn default() -> Self {
        ModelMask::FULL
    }
}

/// Pins every masked-out transmission rate to exactly zero.
pub fn apply_mask(params: ModelParams, mask: ModelMask) -> ModelParams {
    let mut out = params;
    for p in Param::BETAS {
        if !mask.is_active(p) {
            out.set(p, 0.0);
        }
    }
    out
}

/// `1 - exp(-rate)`, the monthly probability of a hazard `rate`.
pub fn hazard_to_probability(rate: f64) -> Result<f64, ModelError> {
    if rate.is_nan() || rate < 0.0 {
        return Err(ModelError::InvalidRate(rate));
    }
    Ok(-libm::expm1(-rate))
}

/// Total monthly colonization hazard acting on each susceptible patient.
pub fn colonization_hazard(
    state: &CompartmentState,
    params: &ModelParams,
    mask: ModelMask,
) -> Result<f64, ModelError> {
    let n = state.total();
    if n == 0 {
        return Err(ModelError::DegeneratePopulation);
    }
    let p = apply_mask(*params, mask);
    Ok(hazard_from_counts(
        &p,
        [state.col_ha, state.inf_ha, state.col_ca, state.inf_ca],
        n,
    ))
}

/// Hazard from prevalence counts `[C_h, I_h, C_c, I_c]` and population `n`.
/// The summation order is fixed so masked and zeroed rates agree bitwise.
pub(crate) fn hazard_from_counts(params: &ModelParams, prevalence: [Count; 4], n: Count) -> f64 {
    let n = n as f64;
    params.beta_ch * prevalence[0] as f64 / n
        + params.beta_ih * prevalence[1] as f64 / n
        + params.beta_cc * prevalence[2] as f64 / n
        + params.beta_ic * prevalence[3] as f64 / n
        + params.sigma
}

/// Probability that a susceptible patient becomes HA-colonized this month.
pub fn colonization_probability(
    state: &CompartmentState,
    params: &ModelParams,
    mask: ModelMask,
) -> Result<f64, ModelError> {
    let hazard = colonization_hazard(state, params, mask)?;
    hazard_to_probability(hazard)
}

/// Applies one month of the difference equations.
pub fn step_compartments(
    state: &CompartmentState,
    events: &EventCounts,
    flows: &ExogenousFlows,
) -> Result<CompartmentState, ModelError> {
    fn settle(equation: Equation, value: i128) -> Result<Count, ModelError> {
        Count::try_from(value).map_err(|_| ModelError::Infeasible { equation, value })
    }
    let i = |c: Count| c as i128;

    let s = i(state.s) + i(flows.admissions) - i(flows.discharges) - i(events.new_col_ha);
    let col_ha = i(state.col_ha) + i(events.new_col_ha) - i(events.new_inf_ha) - i(events.rem_col_ha);
    let inf_ha = i(state.inf_ha) + i(events.new_inf_ha) - i(events.rem_inf_ha);
    let col_ca = i(state.col_ca) + i(events.new_col_ca) - i(events.rem_col_ca);
    let inf_ca = i(state.inf_ca) + i(events.new_inf_ca) - i(events.rem_inf_ca);
    let removed = i(state.removed) + i(events.total_removed());

    // The flows can only be checked together with the colonization draw.
    let next = CompartmentState {
        s: settle(Equation::Susceptible, s)?,
        col_ha: settle(Equation::ColonizedHa, col_ha)?,
        inf_ha: settle(Equation::InfectedHa, inf_ha)?,
        col_ca: settle(Equation::ColonizedCa, col_ca)?,
        inf_ca: settle(Equation::InfectedCa, inf_ca)?,
        removed: settle(Equation::Removed, removed)?,
    };
    events.check_feasible(state)?;
    Ok(next)
}
