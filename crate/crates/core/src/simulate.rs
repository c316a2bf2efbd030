//! Seeded forward simulation: single trajectories, synthetic datasets and
//! posterior-predictive replicate bands.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use thiserror::Error;

use crate::likelihood::{FixedProbabilities, ObservedDataset};
use crate::model::{
    apply_mask, colonization_probability, step_compartments, CompartmentState, Count,
    EventCounts, ExogenousFlows, FixedRates, ModelError, ModelMask, ModelParams,
};
use crate::stats;

/// Monthly admissions and discharges used when no series is supplied.
pub const DEFAULT_MONTHLY_FLOW: Count = 11_918;
pub const DEFAULT_HORIZON: usize = 61;
/// Pooled healthcare-associated and community-acquired monthly means.
pub const DEFAULT_CA_COLONIZED_MEAN: f64 = 46.2;
pub const DEFAULT_CA_INFECTED_MEAN: f64 = 23.5;

const MAX_JOINT_ATTEMPTS: u32 = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error("month {month} is infeasible: {source}")]
    Infeasible { month: usize, source: ModelError },
    #[error("parameters must be finite and non-negative")]
    InvalidParams,
    #[error("no posterior draws to replicate from")]
    EmptyChain,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Deterministic random stream for replicate `index` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index)
}

/// Source of the community-acquired arrivals each month.
#[derive(Debug, Clone, PartialEq)]
pub enum CaArrivals {
    /// Observed `(new_col_ca, new_inf_ca)` per month.
    Series(Vec<(Count, Count)>),
    /// Independent Poisson counts with the given monthly means.
    Poisson { col_mean: f64, inf_mean: f64 },
}

impl Default for CaArrivals {
    fn default() -> Self {
        CaArrivals::Poisson {
            col_mean: DEFAULT_CA_COLONIZED_MEAN,
            inf_mean: DEFAULT_CA_INFECTED_MEAN,
        }
    }
}

/// How the two exits from the HA-colonized pool are made jointly feasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColonizedExit {
    /// Draw infection and isolation independently, redraw the pair while
    /// the two together exceed the pool.
    Rejection,
    /// Draw infections first, then isolation from the binomial truncated to
    /// the patients who remain colonized. Infections stay exactly binomial.
    #[default]
    InfectionFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub horizon: usize,
    pub init: CompartmentState,
    pub flows: Vec<ExogenousFlows>,
    pub ca_arrivals: CaArrivals,
    pub colonized_exit: ColonizedExit,
    pub seed: u64,
}

impl SimulationConfig {
    /// Constant default flows and Poisson community arrivals.
    pub fn with_defaults(horizon: usize, init: CompartmentState, seed: u64) -> Self {
        SimulationConfig {
            horizon,
            init,
            flows: alloc::vec![
                ExogenousFlows {
                    admissions: DEFAULT_MONTHLY_FLOW,
                    discharges: DEFAULT_MONTHLY_FLOW,
                };
                horizon
            ],
            ca_arrivals: CaArrivals::default(),
            colonized_exit: ColonizedExit::default(),
            seed,
        }
    }

    /// Replays the flows and community arrivals of an observed dataset.
    pub fn replaying(data: &ObservedDataset, seed: u64) -> Self {
        SimulationConfig {
            horizon: data.months(),
            init: data.init,
            flows: data.flows.clone(),
            ca_arrivals: CaArrivals::Series(
                data.new_col_ca
                    .iter()
                    .copied()
                    .zip(data.new_inf_ca.iter().copied())
                    .collect(),
            ),
            colonized_exit: ColonizedExit::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.horizon == 0 {
            return Err(SimulationError::InvalidConfig("horizon must be at least 1"));
        }
        if self.flows.len() != self.horizon {
            return Err(SimulationError::InvalidConfig("flow series length differs from horizon"));
        }
        match &self.ca_arrivals {
            CaArrivals::Series(s) if s.len() != self.horizon => Err(SimulationError::InvalidConfig(
                "community arrival series length differs from horizon",
            )),
            CaArrivals::Poisson { col_mean, inf_mean }
                if !(col_mean.is_finite() && *col_mean >= 0.0 && inf_mean.is_finite() && *inf_mean >= 0.0) =>
            {
                Err(SimulationError::InvalidConfig("Poisson means must be finite and non-negative"))
            }
            _ => Ok(()),
        }
    }
}

/// States at the start of each month (`horizon + 1` entries) and the events
/// linking them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<CompartmentState>,
    pub events: Vec<EventCounts>,
    /// Redraws needed to make the HA-colonized exits feasible.
    pub joint_rejections: u64,
}

impl Trajectory {
    pub fn months(&self) -> usize {
        self.events.len()
    }
}

fn binomial<R: Rng + ?Sized>(rng: &mut R, n: Count, p: f64) -> Count {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("probability checked to lie in (0, 1)").sample(rng)
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> Count {
    if mean <= 0.0 {
        return 0;
    }
    let x: f64 = Poisson::new(mean).expect("positive finite mean").sample(rng);
    x as Count
}

/// Events drawn for one month plus the number of joint redraws it took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrawnTransitions {
    pub events: EventCounts,
    pub joint_rejections: u32,
}

/// Draws the in-hospital transitions of one month. Community arrivals are
/// left at zero; they are supplied by the caller.
pub fn draw_transitions<R: Rng + ?Sized>(
    state: &CompartmentState,
    params: &ModelParams,
    fixed: &FixedRates,
    mask: ModelMask,
    rng: &mut R,
) -> Result<EventCounts, SimulationError> {
    draw_transitions_with(state, params, fixed, mask, ColonizedExit::default(), rng).map(|d| d.events)
}

pub fn draw_transitions_with<R: Rng + ?Sized>(
    state: &CompartmentState,
    params: &ModelParams,
    fixed: &FixedRates,
    mask: ModelMask,
    exit: ColonizedExit,
    rng: &mut R,
) -> Result<DrawnTransitions, SimulationError> {
    if !params.is_valid() {
        return Err(SimulationError::InvalidParams);
    }
    fixed.validate()?;
    let params = apply_mask(*params, mask);
    let probs = FixedProbabilities::new(&params, fixed)?;
    let p_col = colonization_probability(state, &params, mask)?;

    let new_col_ha = binomial(rng, state.s, p_col);
    let mut joint_rejections = 0u32;
    let (new_inf_ha, rem_col_ha) = match exit {
        ColonizedExit::Rejection => loop {
            let inf = binomial(rng, state.col_ha, probs.infection);
            let rem = binomial(rng, state.col_ha, probs.removal[0]);
            if inf + rem <= state.col_ha {
                break (inf, rem);
            }
            joint_rejections += 1;
            if joint_rejections >= MAX_JOINT_ATTEMPTS {
                // Both exits near-certain: keep the infections, isolate the rest.
                break (inf, state.col_ha - inf);
            }
        },
        ColonizedExit::InfectionFirst => {
            let inf = binomial(rng, state.col_ha, probs.infection);
            let room = state.col_ha - inf;
            let rem = loop {
                let rem = binomial(rng, state.col_ha, probs.removal[0]);
                if rem <= room {
                    break rem;
                }
                joint_rejections += 1;
                if joint_rejections >= MAX_JOINT_ATTEMPTS {
                    break room;
                }
            };
            (inf, rem)
        }
    };
    let events = EventCounts {
        new_col_ha,
        new_inf_ha,
        new_col_ca: 0,
        new_inf_ca: 0,
        rem_col_ha,
        rem_inf_ha: binomial(rng, state.inf_ha, probs.removal[1]),
        rem_col_ca: binomial(rng, state.col_ca, probs.removal[2]),
        rem_inf_ca: binomial(rng, state.inf_ca, probs.removal[3]),
    };
    Ok(DrawnTransitions {
        events,
        joint_rejections,
    })
}

fn simulate_with_rng<R: Rng + ?Sized>(
    config: &SimulationConfig,
    params: &ModelParams,
    fixed: &FixedRates,
    mask: ModelMask,
    rng: &mut R,
) -> Result<Trajectory, SimulationError> {
    config.validate()?;
    let mut states = Vec::with_capacity(config.horizon + 1);
    let mut events = Vec::with_capacity(config.horizon);
    let mut joint_rejections = 0u64;
    let mut state = config.init;
    states.push(state);
    for t in 0..config.horizon {
        let drawn = draw_transitions_with(&state, params, fixed, mask, config.colonized_exit, rng)
            .map_err(|e| match e {
                SimulationError::Model(source) => SimulationError::Infeasible { month: t + 1, source },
                other => other,
            })?;
        let mut ev = drawn.events;
        joint_rejections += u64::from(drawn.joint_rejections);
        (ev.new_col_ca, ev.new_inf_ca) = match &config.ca_arrivals {
            CaArrivals::Series(s) => s[t],
            CaArrivals::Poisson { col_mean, inf_mean } => (poisson(rng, *col_mean), poisson(rng, *inf_mean)),
        };
        state = step_compartments(&state, &ev, &config.flows[t])
            .map_err(|source| SimulationError::Infeasible { month: t + 1, source })?;
        states.push(state);
        events.push(ev);
    }
    Ok(Trajectory {
        states,
        events,
        joint_rejections,
    })
}

/// Simulates `config.horizon` months from `config.init` on the stream
/// `stream_rng(config.seed, 0)`.
pub fn simulate_trajectory(
    config: &SimulationConfig,
    params: &ModelParams,
    fixed: &FixedRates,
    mask: ModelMask,
) -> Result<Trajectory, SimulationError> {
    let mut rng = stream_rng(config.seed, 0);
    simulate_with_rng(config, params, fixed, mask, &mut rng)
}

/// Keeps only what surveillance records: new cases, flows and the initial census.
pub fn project_observed(config: &SimulationConfig, traj: &Trajectory) -> ObservedDataset {
    ObservedDataset {
        init: config.init,
        new_col_ha: traj.events.iter().map(|e| e.new_col_ha).collect(),
        new_inf_ha: traj.events.iter().map(|e| e.new_inf_ha).collect(),
        new_col_ca: traj.events.iter().map(|e| e.new_col_ca).collect(),
        new_inf_ca: traj.events.iter().map(|e| e.new_inf_ca).collect(),
        flows: config.flows.clone(),
    }
}

pub fn generate_synthetic_dataset(
    config: &SimulationConfig,
    params: &ModelParams,
    fixed: &FixedRates,
    mask: ModelMask,
) -> Result<ObservedDataset, SimulationError> {
    let traj = simulate_trajectory(config, params, fixed, mask)?;
    Ok(project_observed(config, &traj))
}

/// Per-month predictive mean and 95% band for the two HA channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonthBand {
    pub month: usize,
    pub mean_col: f64,
    pub lo_col: f64,
    pub hi_col: f64,
    pub mean_inf: f64,
    pub lo_inf: f64,
    pub hi_inf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSummary {
    pub months: Vec<MonthBand>,
    pub n_rep: usize,
    pub joint_rejections: u64,
}

impl ReplicateSummary {
    pub fn mean_colonization(&self) -> Vec<f64> {
        self.months.iter().map(|m| m.mean_col).collect()
    }

    pub fn mean_infection(&self) -> Vec<f64> {
        self.months.iter().map(|m| m.mean_inf).collect()
    }

    /// Fractions of months whose observed count lies inside the band, for
    /// colonization and infection.
    pub fn coverage(&self, observed_col: &[Count], observed_inf: &[Count]) -> (f64, f64) {
        let n = self.months.len().max(1) as f64;
        let inside = |obs: &[Count], pick: fn(&MonthBand) -> (f64, f64)| {
            self.months
                .iter()
                .zip(obs)
                .filter(|(b, o)| {
                    let (lo, hi) = pick(b);
                    let o = **o as f64;
                    lo <= o && o <= hi
                })
                .count() as f64
                / n
        };
        (
            inside(observed_col, |b| (b.lo_col, b.hi_col)),
            inside(observed_inf, |b| (b.lo_inf, b.hi_inf)),
        )
    }
}

fn summarize_replicates(col: &[Vec<f64>], inf: &[Vec<f64>], n_rep: usize, joint_rejections: u64) -> ReplicateSummary {
    let months = col
        .iter()
        .zip(inf)
        .enumerate()
        .map(|(t, (c, i))| {
            let cs = stats::sorted_copy(c);
            let is = stats::sorted_copy(i);
            MonthBand {
                month: t + 1,
                mean_col: stats::mean(c),
                lo_col: stats::quantile_sorted(&cs, 0.025),
                hi_col: stats::quantile_sorted(&cs, 0.975),
                mean_inf: stats::mean(i),
                lo_inf: stats::quantile_sorted(&is, 0.025),
                hi_inf: stats::quantile_sorted(&is, 0.975),
            }
        })
        .collect();
    ReplicateSummary {
        months,
        n_rep,
        joint_rejections,
    }
}

/// Replicate `r` simulates from `draws[r * len / n_rep]` on stream
/// `stream_rng(seed, r)`.
pub fn posterior_predictive(
    draws: &[ModelParams],
    config: &SimulationConfig,
    fixed: &FixedRates,
    mask: ModelMask,
    n_rep: usize,
    seed: u64,
) -> Result<ReplicateSummary, SimulationError> {
    if draws.is_empty() {
        return Err(SimulationError::EmptyChain);
    }
    if n_rep == 0 {
        return Err(SimulationError::InvalidConfig("n_rep must be at least 1"));
    }
    config.validate()?;
    let horizon = config.horizon;
    let mut col = alloc::vec![Vec::with_capacity(n_rep); horizon];
    let mut inf = alloc::vec![Vec::with_capacity(n_rep); horizon];
    let mut rejections = 0;
    for r in 0..n_rep {
        let params = &draws[r * draws.len() / n_rep];
        let mut rng = stream_rng(seed, r as u64);
        let traj = simulate_with_rng(config, params, fixed, mask, &mut rng)?;
        rejections += traj.joint_rejections;
        for (t, ev) in traj.events.iter().enumerate() {
            col[t].push(ev.new_col_ha as f64);
            inf[t].push(ev.new_inf_ha as f64);
        }
    }
    Ok(summarize_replicates(&col, &inf, n_rep, rejections))
}

/// Ensemble of `n_rep` simulations at fixed parameters.
pub fn simulate_ensemble(
    params: &ModelParams,
    config: &SimulationConfig,
    fixed: &FixedRates,
    mask: ModelMask,
    n_rep: usize,
    seed: u64,
) -> Result<ReplicateSummary, SimulationError> {
    posterior_predictive(core::slice::from_ref(params), config, fixed, mask, n_rep, seed)
}
