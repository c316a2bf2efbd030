//! Incrementally updated log-likelihood used by the sampler.
//!
//! Every cached cell is computed with the same kernel as
//! [`crate::likelihood::pointwise_log_likelihood`], so a fresh evaluation and
//! the cache agree bitwise.

use alloc::vec::Vec;

use crate::likelihood::{
    log_binomial_unchecked, removal_pool, reconstruct_trajectory, Channel, LatentRemovals,
    LikelihoodError, ObservedDataset, PointwiseLogLik, Removal,
};
use crate::model::{apply_mask, hazard_from_counts, hazard_to_probability, Count, FixedRates, ModelMask, ModelParams, Param};
use crate::stats::LnFactorials;

#[derive(Debug, Clone, Copy)]
struct LogProbs {
    ln_p: f64,
    ln_q: f64,
}

impl LogProbs {
    fn from_probability(p: f64) -> Self {
        LogProbs {
            ln_p: libm::log(p),
            ln_q: libm::log1p(-p),
        }
    }

    fn from_hazard(rate: f64) -> Self {
        // rate validity is checked by the caller
        Self::from_probability(hazard_to_probability(rate).unwrap_or(f64::NAN))
    }
}

/// A latent move evaluated but not yet applied.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LatentMove {
    pub which: Removal,
    pub month: usize,
    pub delta: i64,
    pub log_lik_change: f64,
}

/// A shift of removals between adjacent months, evaluated but not applied.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ShiftMove {
    pub which: Removal,
    pub month: usize,
    pub delta: i64,
    pub log_lik_change: f64,
    cells: [f64; 4],
    hazard: f64,
}

pub(crate) struct LikelihoodState<'a> {
    data: &'a ObservedDataset,
    params: ModelParams,
    lnf: LnFactorials,
    infection: LogProbs,
    removal: [LogProbs; 4],
    months: usize,
    population: Vec<Count>,
    susceptible: Vec<Count>,
    /// Pool sizes C_h, I_h, C_c, I_c at the start of each month.
    pools: [Vec<Count>; 4],
    /// Pool minus its outflows during the month; never negative.
    leftover: [Vec<Count>; 4],
    latents: LatentRemovals,
    hazard: Vec<f64>,
    /// Cached cells, channel-major.
    terms: [Vec<f64>; 6],
    scratch_hazard: Vec<f64>,
    scratch: [Vec<f64>; 3],
}

impl<'a> LikelihoodState<'a> {
    pub fn new(
        data: &'a ObservedDataset,
        latents: LatentRemovals,
        params: &ModelParams,
        fixed: &FixedRates,
        mask: ModelMask,
    ) -> Result<Self, LikelihoodError> {
        if !params.is_valid() {
            return Err(LikelihoodError::InvalidParams);
        }
        fixed.validate()?;
        let traj = reconstruct_trajectory(data, &latents)?;
        let months = data.months();
        let params = apply_mask(*params, mask);

        let mut max_n = 0;
        let mut population = Vec::with_capacity(months);
        let mut susceptible = Vec::with_capacity(months);
        let mut pools: [Vec<Count>; 4] = Default::default();
        let mut leftover: [Vec<Count>; 4] = Default::default();
        for t in 0..months {
            let st = &traj.states[t];
            let n = st.total();
            if n == 0 {
                return Err(LikelihoodError::Infeasible {
                    month: t + 1,
                    source: crate::model::ModelError::DegeneratePopulation,
                });
            }
            max_n = max_n.max(n);
            population.push(n);
            susceptible.push(st.s);
            for which in Removal::ALL {
                let pool = removal_pool(st, which);
                let mut out = latents.get(which, t);
                if which == Removal::ColHa {
                    out += data.new_inf_ha[t];
                }
                pools[which.index()].push(pool);
                leftover[which.index()].push(pool - out);
            }
        }
        // Pools can grow above the current census once latents shrink; keep headroom.
        let mut lnf = LnFactorials::with_capacity(max_n + 64);
        lnf.reserve(max_n + 64);

        let mut state = LikelihoodState {
            data,
            params,
            lnf,
            infection: LogProbs::from_hazard(params.alpha),
            removal: [fixed.rho1, fixed.rho2, fixed.rho3, fixed.rho4].map(LogProbs::from_hazard),
            months,
            population,
            susceptible,
            pools,
            leftover,
            latents,
            hazard: alloc::vec![0.0; months],
            terms: Default::default(),
            scratch_hazard: alloc::vec![0.0; months],
            scratch: [alloc::vec![0.0; months], alloc::vec![0.0; months], alloc::vec![0.0; months]],
        };
        for t in 0..months {
            state.hazard[t] = state.hazard_at(&state.params, t, None);
        }
        let col: Vec<f64> = (0..months).map(|t| state.colonization_term(t, state.hazard[t])).collect();
        let inf: Vec<f64> = (0..months)
            .map(|t| state.infection_term(t, state.pools[0][t], state.infection))
            .collect();
        state.terms[Channel::Colonization.index()] = col;
        state.terms[Channel::Infection.index()] = inf;
        for which in Removal::ALL {
            let cells: Vec<f64> = (0..months)
                .map(|t| state.removal_term(which, state.pools[which.index()][t], state.latents.get(which, t)))
                .collect();
            state.terms[which.channel().index()] = cells;
        }
        Ok(state)
    }

    pub fn months(&self) -> usize {
        self.months
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn latents(&self) -> &LatentRemovals {
        &self.latents
    }

    pub fn into_latents(self) -> LatentRemovals {
        self.latents
    }

    /// Hazard at month `t`, with pool `shift = (pool index, delta)` applied.
    #[inline]
    fn hazard_at(&self, params: &ModelParams, t: usize, shift: Option<(usize, i64)>) -> f64 {
        let mut prev = [self.pools[0][t], self.pools[1][t], self.pools[2][t], self.pools[3][t]];
        if let Some((i, d)) = shift {
            prev[i] = (prev[i] as i64 - d) as Count;
        }
        hazard_from_counts(params, prev, self.population[t])
    }

    #[inline]
    fn colonization_term(&self, t: usize, hazard: f64) -> f64 {
        let p = -libm::expm1(-hazard);
        let lp = LogProbs::from_probability(p);
        let n = self.susceptible[t];
        let k = self.data.new_col_ha[t];
        log_binomial_unchecked(k, n, lp.ln_p, lp.ln_q, self.lnf.ln_choose(n, k))
    }

    #[inline]
    fn infection_term(&self, t: usize, col_ha: Count, probs: LogProbs) -> f64 {
        let k = self.data.new_inf_ha[t];
        log_binomial_unchecked(k, col_ha, probs.ln_p, probs.ln_q, self.lnf.ln_choose(col_ha, k))
    }

    #[inline]
    fn removal_term(&self, which: Removal, pool: Count, removed: Count) -> f64 {
        let lp = self.removal[which.index()];
        log_binomial_unchecked(removed, pool, lp.ln_p, lp.ln_q, self.lnf.ln_choose(pool, removed))
    }

    /// Left-to-right row-major sum of all cells.
    pub fn total(&self) -> f64 {
        let mut acc = 0.0;
        for t in 0..self.months {
            for c in 0..PointwiseLogLik::CHANNELS {
                acc += self.terms[c][t];
            }
        }
        acc
    }

    /// Writes the cells row-major into `out`.
    pub fn write_pointwise(&self, out: &mut Vec<f64>) {
        out.clear();
        for t in 0..self.months {
            for c in 0..PointwiseLogLik::CHANNELS {
                out.push(self.terms[c][t]);
            }
        }
    }

    #[cfg(test)]
    pub fn pointwise(&self) -> PointwiseLogLik {
        let mut v = Vec::with_capacity(self.months * PointwiseLogLik::CHANNELS);
        self.write_pointwise(&mut v);
        PointwiseLogLik::from_values(self.months, v)
    }

    /// Change in log-likelihood if parameter `which` took `value`; the
    /// candidate cells are left in scratch space for [`Self::commit_param`].
    pub fn propose_param(&mut self, which: Param, value: f64) -> f64 {
        let mut candidate = self.params;
        candidate.set(which, value);
        let mut change = 0.0;
        if which == Param::Alpha {
            let probs = LogProbs::from_hazard(value);
            let inf = Channel::Infection.index();
            for t in 0..self.months {
                let cell = self.infection_term(t, self.pools[0][t], probs);
                self.scratch[0][t] = cell;
                change += cell - self.terms[inf][t];
            }
        } else {
            let col = Channel::Colonization.index();
            for t in 0..self.months {
                let h = self.hazard_at(&candidate, t, None);
                self.scratch_hazard[t] = h;
                let cell = self.colonization_term(t, h);
                self.scratch[0][t] = cell;
                change += cell - self.terms[col][t];
            }
        }
        change
    }

    pub fn commit_param(&mut self, which: Param, value: f64) {
        self.params.set(which, value);
        if which == Param::Alpha {
            self.infection = LogProbs::from_hazard(value);
            core::mem::swap(&mut self.terms[Channel::Infection.index()], &mut self.scratch[0]);
        } else {
            core::mem::swap(&mut self.hazard, &mut self.scratch_hazard);
            core::mem::swap(&mut self.terms[Channel::Colonization.index()], &mut self.scratch[0]);
        }
    }

    /// Evaluates moving `R*_{which, month}` by `delta`. `None` when the move
    /// leaves the feasible set.
    #[cfg(test)]
    pub fn propose_latent(&mut self, which: Removal, month: usize, delta: i64) -> Option<LatentMove> {
        let mut mv = self.propose_latent_removal(which, month, delta)?;
        self.complete_latent(&mut mv);
        Some(mv)
    }

    /// First stage of a latent move: feasibility and the change in the
    /// moved pool's own removal cells only. The returned move must be
    /// finished with [`Self::complete_latent`] before it is committed.
    pub fn propose_latent_removal(&mut self, which: Removal, month: usize, delta: i64) -> Option<LatentMove> {
        let c = which.index();
        let current = self.latents.get(which, month) as i64;
        if current + delta < 0 {
            return None;
        }
        if delta > 0 && self.leftover[c][month..].iter().any(|l| (*l as i64) < delta) {
            return None;
        }
        let rem_ch = which.channel().index();
        let mut change = 0.0;
        let cell = self.removal_term(which, self.pools[c][month], (current + delta) as Count);
        self.scratch[0][month] = cell;
        change += cell - self.terms[rem_ch][month];
        for s in month + 1..self.months {
            let pool = (self.pools[c][s] as i64 - delta) as Count;
            let cell = self.removal_term(which, pool, self.latents.get(which, s));
            self.scratch[0][s] = cell;
            change += cell - self.terms[rem_ch][s];
        }
        Some(LatentMove {
            which,
            month,
            delta,
            log_lik_change: change,
        })
    }

    /// Adds the infection and colonization cells that the move shifts.
    pub fn complete_latent(&mut self, mv: &mut LatentMove) {
        let LatentMove { which, month, delta, .. } = *mv;
        let c = which.index();
        let mut change = 0.0;
        if which == Removal::ColHa {
            let inf = Channel::Infection.index();
            for s in month + 1..self.months {
                let pool = (self.pools[0][s] as i64 - delta) as Count;
                let cell = self.infection_term(s, pool, self.infection);
                self.scratch[1][s] = cell;
                change += cell - self.terms[inf][s];
            }
        }
        if self.params.get(Param::BETAS[c]) != 0.0 {
            let col = Channel::Colonization.index();
            for s in month + 1..self.months {
                let h = self.hazard_at(&self.params, s, Some((c, delta)));
                self.scratch_hazard[s] = h;
                let cell = self.colonization_term(s, h);
                self.scratch[2][s] = cell;
                change += cell - self.terms[col][s];
            }
        }
        mv.log_lik_change += change;
    }

    /// Applies a move returned by the most recent [`Self::propose_latent`].
    pub fn commit_latent(&mut self, mv: LatentMove) {
        let LatentMove {
            which,
            month,
            delta,
            ..
        } = mv;
        let c = which.index();
        let rem_ch = which.channel().index();
        let current = self.latents.get(which, month) as i64;
        self.latents.set(which, month, (current + delta) as Count);
        for s in month..self.months {
            self.leftover[c][s] = (self.leftover[c][s] as i64 - delta) as Count;
            self.terms[rem_ch][s] = self.scratch[0][s];
        }
        for s in month + 1..self.months {
            self.pools[c][s] = (self.pools[c][s] as i64 - delta) as Count;
        }
        if which == Removal::ColHa {
            let inf = Channel::Infection.index();
            self.terms[inf][month + 1..].copy_from_slice(&self.scratch[1][month + 1..]);
        }
        if self.params.get(Param::BETAS[c]) != 0.0 {
            let col = Channel::Colonization.index();
            self.hazard[month + 1..].copy_from_slice(&self.scratch_hazard[month + 1..]);
            self.terms[col][month + 1..].copy_from_slice(&self.scratch[2][month + 1..]);
        }
    }

    /// Evaluates moving `delta` removals from month `month + 1` to `month`
    /// (negative `delta` moves them the other way). Only the pool at
    /// `month + 1` changes, so the move touches at most four cells.
    pub fn propose_latent_shift(&mut self, which: Removal, month: usize, delta: i64) -> Option<ShiftMove> {
        let next = month + 1;
        if next >= self.months {
            return None;
        }
        let c = which.index();
        let here = self.latents.get(which, month) as i64 + delta;
        let there = self.latents.get(which, next) as i64 - delta;
        if here < 0 || there < 0 || (self.leftover[c][month] as i64) < delta {
            return None;
        }
        let pool_next = (self.pools[c][next] as i64 - delta) as Count;
        let rem_ch = which.channel().index();
        let mut cells = [0.0; 4];
        cells[0] = self.removal_term(which, self.pools[c][month], here as Count);
        cells[1] = self.removal_term(which, pool_next, there as Count);
        let mut change = cells[0] - self.terms[rem_ch][month] + cells[1] - self.terms[rem_ch][next];
        if which == Removal::ColHa {
            cells[2] = self.infection_term(next, pool_next, self.infection);
            change += cells[2] - self.terms[Channel::Infection.index()][next];
        }
        let mut hazard = self.hazard[next];
        if self.params.get(Param::BETAS[c]) != 0.0 {
            hazard = self.hazard_at(&self.params, next, Some((c, delta)));
            cells[3] = self.colonization_term(next, hazard);
            change += cells[3] - self.terms[Channel::Colonization.index()][next];
        }
        Some(ShiftMove {
            which,
            month,
            delta,
            log_lik_change: change,
            cells,
            hazard,
        })
    }

    pub fn commit_latent_shift(&mut self, mv: ShiftMove) {
        let ShiftMove {
            which,
            month,
            delta,
            cells,
            hazard,
            ..
        } = mv;
        let next = month + 1;
        let c = which.index();
        let rem_ch = which.channel().index();
        let here = self.latents.get(which, month) as i64 + delta;
        let there = self.latents.get(which, next) as i64 - delta;
        self.latents.set(which, month, here as Count);
        self.latents.set(which, next, there as Count);
        self.leftover[c][month] = (self.leftover[c][month] as i64 - delta) as Count;
        self.pools[c][next] = (self.pools[c][next] as i64 - delta) as Count;
        self.terms[rem_ch][month] = cells[0];
        self.terms[rem_ch][next] = cells[1];
        if which == Removal::ColHa {
            self.terms[Channel::Infection.index()][next] = cells[2];
        }
        if self.params.get(Param::BETAS[c]) != 0.0 {
            self.hazard[next] = hazard;
            self.terms[Channel::Colonization.index()][next] = cells[3];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::pointwise_log_likelihood;
    use crate::model::CompartmentState;
    use crate::simulate::{generate_synthetic_dataset, stream_rng, SimulationConfig};
    use crate::inference::latent::initial_latents;
    use rand::Rng;

    fn dataset() -> ObservedDataset {
        let init = CompartmentState {
            s: 3048,
            col_ha: 25,
            inf_ha: 6,
            col_ca: 46,
            inf_ca: 24,
            removed: 0,
        };
        let cfg = SimulationConfig::with_defaults(24, init, 4);
        let p = ModelParams {
            beta_ch: 0.0421,
            beta_ih: 0.0567,
            beta_cc: 0.0095,
            beta_ic: 0.0407,
            sigma: 0.01,
            alpha: 0.2628,
        };
        generate_synthetic_dataset(&cfg, &p, &FixedRates::default(), ModelMask::FULL).unwrap()
    }

    #[test]
    fn random_walk_stays_bitwise_equal_to_fresh_evaluation() {
        let data = dataset();
        let fixed = FixedRates::default();
        let mask = ModelMask::from_model_id(12).unwrap();
        let lat = initial_latents(&data, &fixed).unwrap();
        let mut params = ModelParams {
            beta_ch: 0.3,
            beta_ih: 0.0,
            beta_cc: 0.2,
            beta_ic: 0.4,
            sigma: 0.012,
            alpha: 0.3,
        };
        let mut st = LikelihoodState::new(&data, lat, &params, &fixed, mask).unwrap();
        let mut rng = stream_rng(1, 0);
        for step in 0..3000 {
            if step % 10 == 0 {
                let which = [Param::BetaCh, Param::BetaCc, Param::BetaIc, Param::Sigma, Param::Alpha][rng.random_range(0..5)];
                let v = params.get(which) * libm::exp(rng.random_range(-0.3..0.3));
                st.propose_param(which, v);
                st.commit_param(which, v);
                params.set(which, v);
            } else if step % 2 == 0 {
                let which = Removal::ALL[rng.random_range(0..4)];
                let t = rng.random_range(0..data.months());
                let d = [-1i64, 1][rng.random_range(0..2)];
                if let Some(mv) = st.propose_latent_shift(which, t, d) {
                    let before = st.total();
                    st.commit_latent_shift(mv);
                    let after = st.total();
                    if before.is_finite() && after.is_finite() {
                        assert!((after - before - mv.log_lik_change).abs() < 1e-8);
                    }
                }
            } else {
                let which = Removal::ALL[rng.random_range(0..4)];
                let t = rng.random_range(0..data.months());
                let d = [-2i64, -1, 1, 2][rng.random_range(0..4)];
                if let Some(mv) = st.propose_latent(which, t, d) {
                    let before = st.total();
                    st.commit_latent(mv);
                    let after = st.total();
                    if before.is_finite() && after.is_finite() {
                        assert!((after - before - mv.log_lik_change).abs() < 1e-8);
                    }
                }
            }
        }
        let fresh = pointwise_log_likelihood(&data, st.latents(), &params, &fixed, mask).unwrap();
        let cached = st.pointwise();
        for (a, b) in fresh.values().iter().zip(cached.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
