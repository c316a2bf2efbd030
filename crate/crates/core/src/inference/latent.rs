//! Data augmentation over the unobserved isolation counts.

use alloc::vec::Vec;

use rand::Rng;

use super::engine::LikelihoodState;
use super::InferenceError;
use crate::likelihood::{LatentRemovals, ObservedDataset, Removal};
use crate::model::{hazard_to_probability, Count, FixedRates, ModelMask, ModelParams};

const STEPS: [i64; 4] = [-2, -1, 1, 2];

/// Inflow and observed outflow of each pool in month `t`.
fn pool_flows(data: &ObservedDataset, which: Removal, t: usize) -> (Count, Count) {
    match which {
        Removal::ColHa => (data.new_col_ha[t], data.new_inf_ha[t]),
        Removal::InfHa => (data.new_inf_ha[t], 0),
        Removal::ColCa => (data.new_col_ca[t], 0),
        Removal::InfCa => (data.new_inf_ca[t], 0),
    }
}

fn initial_pool(data: &ObservedDataset, which: Removal) -> Count {
    match which {
        Removal::ColHa => data.init.col_ha,
        Removal::InfHa => data.init.inf_ha,
        Removal::ColCa => data.init.col_ca,
        Removal::InfCa => data.init.inf_ca,
    }
}

/// Deterministic starting point: each month removes `round(pool * p)`,
/// clipped so that every later month stays feasible.
pub fn initial_latents(data: &ObservedDataset, fixed: &FixedRates) -> Result<LatentRemovals, InferenceError> {
    data.validate()?;
    fixed.validate()?;
    let months = data.months();
    let probs = [fixed.rho1, fixed.rho2, fixed.rho3, fixed.rho4].map(|r| hazard_to_probability(r).unwrap_or(1.0));
    let mut out = LatentRemovals::zeros(months);
    for which in Removal::ALL {
        // Pools and leftovers with no removals at all; removing fewer never
        // hurts feasibility, so this decides whether any assignment exists.
        let mut pool0 = Vec::with_capacity(months);
        let mut left0 = Vec::with_capacity(months);
        let mut x = initial_pool(data, which) as i128;
        for t in 0..months {
            let (inflow, outflow) = pool_flows(data, which, t);
            let left = x - outflow as i128;
            if left < 0 {
                return Err(InferenceError::NoFeasibleLatents { month: t + 1 });
            }
            pool0.push(x);
            left0.push(left);
            x = left + inflow as i128;
        }
        let mut suffix_min = alloc::vec![i128::MAX; months + 1];
        for t in (0..months).rev() {
            suffix_min[t] = suffix_min[t + 1].min(left0[t]);
        }
        let mut removed_so_far: i128 = 0;
        for t in 0..months {
            let pool = pool0[t] - removed_so_far;
            let target = libm::round(pool as f64 * probs[which.index()]) as i128;
            let cap = suffix_min[t] - removed_so_far;
            let r = target.min(cap).max(0);
            out.set(which, t, r as Count);
            removed_so_far += r;
        }
    }
    Ok(out)
}

/// One systematic sweep over every (flow, month): single-site moves with
/// delayed acceptance (screened on the removal cells of their own pool, and
/// only survivors pay for the infection and colonization cells), then shifts
/// of one removal between adjacent months. Returns the number of accepted
/// moves.
pub(crate) fn sweep<R: Rng + ?Sized>(state: &mut LikelihoodState<'_>, rng: &mut R) -> usize {
    let mut accepted = 0;
    for which in Removal::ALL {
        for t in 0..state.months() {
            let delta = STEPS[rng.random_range(0..STEPS.len())];
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            let Some(mut mv) = state.propose_latent_removal(which, t, delta) else {
                continue;
            };
            let first = mv.log_lik_change;
            if libm::log(u1) >= first {
                continue;
            }
            state.complete_latent(&mut mv);
            if libm::log(u2) < mv.log_lik_change - first {
                state.commit_latent(mv);
                accepted += 1;
            }
        }
        for t in 0..state.months().saturating_sub(1) {
            let delta = if rng.random::<bool>() { 1 } else { -1 };
            let u: f64 = rng.random();
            if let Some(mv) = state.propose_latent_shift(which, t, delta) {
                if libm::log(u) < mv.log_lik_change {
                    state.commit_latent_shift(mv);
                    accepted += 1;
                }
            }
        }
    }
    accepted
}

/// Runs one Metropolis sweep over the latent removals at fixed parameters.
pub fn update_latent_removals<R: Rng + ?Sized>(
    current: &LatentRemovals,
    data: &ObservedDataset,
    params: &ModelParams,
    fixed: &FixedRates,
    mask: ModelMask,
    rng: &mut R,
) -> Result<LatentRemovals, InferenceError> {
    let mut state = LikelihoodState::new(data, current.clone(), params, fixed, mask)?;
    sweep(&mut state, rng);
    Ok(state.into_latents())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::reconstruct_trajectory;
    use crate::model::{CompartmentState, ExogenousFlows};
    use crate::simulate::stream_rng;

    fn toy(months: usize) -> ObservedDataset {
        ObservedDataset {
            init: CompartmentState {
                s: 40,
                col_ha: 5,
                inf_ha: 3,
                col_ca: 4,
                inf_ca: 2,
                removed: 0,
            },
            new_col_ha: alloc::vec![2; months],
            new_inf_ha: alloc::vec![1; months],
            new_col_ca: alloc::vec![3; months],
            new_inf_ca: alloc::vec![1; months],
            flows: alloc::vec![ExogenousFlows { admissions: 5, discharges: 5 }; months],
        }
    }

    #[test]
    fn greedy_start_is_feasible() {
        let data = toy(12);
        let lat = initial_latents(&data, &FixedRates::default()).unwrap();
        assert!(reconstruct_trajectory(&data, &lat).is_ok());
        assert_eq!(lat, initial_latents(&data, &FixedRates::default()).unwrap());
    }

    #[test]
    fn impossible_data_has_no_start() {
        let mut data = toy(3);
        data.new_inf_ha[0] = 50;
        assert!(matches!(
            initial_latents(&data, &FixedRates::default()),
            Err(InferenceError::NoFeasibleLatents { month: 1 })
        ));
    }

    #[test]
    fn certain_isolation_forces_full_removal() {
        let data = toy(4);
        let fixed = FixedRates {
            rho1: f64::INFINITY,
            rho2: f64::INFINITY,
            rho3: f64::INFINITY,
            rho4: f64::INFINITY,
        };
        let params = ModelParams {
            sigma: 0.05,
            alpha: 0.2,
            ..Default::default()
        };
        let mut lat = initial_latents(&data, &fixed).unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..50 {
            lat = update_latent_removals(&lat, &data, &params, &fixed, ModelMask::FULL, &mut rng).unwrap();
            let traj = reconstruct_trajectory(&data, &lat).unwrap();
            for (t, st) in traj.states[..4].iter().enumerate() {
                assert_eq!(lat.get(Removal::ColHa, t), st.col_ha - data.new_inf_ha[t]);
                assert_eq!(lat.get(Removal::InfHa, t), st.inf_ha);
                assert_eq!(lat.get(Removal::ColCa, t), st.col_ca);
                assert_eq!(lat.get(Removal::InfCa, t), st.inf_ca);
            }
        }
    }

    #[test]
    fn vanishing_isolation_keeps_zero_removals() {
        let data = toy(4);
        let fixed = FixedRates {
            rho1: 1e-300,
            rho2: 1e-300,
            rho3: 1e-300,
            rho4: 1e-300,
        };
        let params = ModelParams {
            sigma: 0.05,
            alpha: 0.2,
            ..Default::default()
        };
        let mut lat = initial_latents(&data, &fixed).unwrap();
        assert_eq!(lat, LatentRemovals::zeros(4));
        let mut rng = stream_rng(6, 0);
        for _ in 0..50 {
            lat = update_latent_removals(&lat, &data, &params, &fixed, ModelMask::FULL, &mut rng).unwrap();
            assert_eq!(lat, LatentRemovals::zeros(4));
        }
    }
}
