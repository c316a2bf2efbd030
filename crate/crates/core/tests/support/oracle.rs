//! Exact-arithmetic reference for the chain-binomial likelihood, written
//! from the model equations without using the library's likelihood code.

#![allow(dead_code)]

use mrsa_core::likelihood::{LatentRemovals, Removal};
use mrsa_core::model::{CompartmentState, ExogenousFlows, FixedRates, ModelMask, ModelParams};
use mrsa_core::ObservedDataset;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

pub struct Instance {
    pub data: ObservedDataset,
    pub latents: LatentRemovals,
    pub params: ModelParams,
    pub fixed: FixedRates,
    pub mask: ModelMask,
}

/// Exact `p` and `1 - p` for `p = 1 - exp(-rate)`, each taken from the
/// better-conditioned floating expression and the other completed exactly.
fn probability_pair(rate: f64) -> (BigRational, BigRational) {
    let p = -(-rate).exp_m1();
    if p < 0.5 {
        let p = BigRational::from_float(p).unwrap();
        let q = BigRational::one() - &p;
        (p, q)
    } else {
        let q = BigRational::from_float((-rate).exp()).unwrap();
        let p = BigRational::one() - &q;
        (p, q)
    }
}

fn choose(n: u64, k: u64) -> BigUint {
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    c
}

fn pow(x: &BigRational, e: u64) -> BigRational {
    let mut r = BigRational::one();
    for _ in 0..e {
        r *= x;
    }
    r
}

/// `Bin(k; n, p)` as an exact rational; zero when `k > n`.
pub fn binomial_pmf(k: u64, n: u64, p: &BigRational, q: &BigRational) -> BigRational {
    if k > n {
        return BigRational::zero();
    }
    let c = BigRational::from_integer(BigInt::from(choose(n, k)));
    c * pow(p, k) * pow(q, n - k)
}

fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational; `-inf` for zero.
pub fn ln_rational(x: &BigRational) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    assert!(x.is_positive());
    let n = x.numer().magnitude();
    let d = x.denom().magnitude();
    ln_biguint(n) - ln_biguint(d)
}

/// Exact product of every month's six binomial terms, or `None` when some
/// month is infeasible.
pub fn exact_likelihood(inst: &Instance) -> Option<BigRational> {
    let d = &inst.data;
    let mut p = inst.params;
    if !inst.mask.ch_active {
        p.beta_ch = 0.0;
    }
    if !inst.mask.ih_active {
        p.beta_ih = 0.0;
    }
    if !inst.mask.cc_active {
        p.beta_cc = 0.0;
    }
    if !inst.mask.ic_active {
        p.beta_ic = 0.0;
    }
    let f = inst.fixed;
    let (p_inf, q_inf) = probability_pair(p.alpha);
    let removal = [f.rho1, f.rho2, f.rho3, f.rho4].map(probability_pair);

    let (mut s, mut ch, mut ih, mut cc, mut ic, mut r) = (
        d.init.s as i64,
        d.init.col_ha as i64,
        d.init.inf_ha as i64,
        d.init.col_ca as i64,
        d.init.inf_ca as i64,
        d.init.removed as i64,
    );
    let mut total = BigRational::one();
    for t in 0..d.months() {
        let n = (s + ch + ih + cc + ic + r) as f64;
        let hazard =
            p.beta_ch * ch as f64 / n + p.beta_ih * ih as f64 / n + p.beta_cc * cc as f64 / n + p.beta_ic * ic as f64 / n + p.sigma;
        let (p_col, q_col) = probability_pair(hazard);
        let r1 = inst.latents.get(Removal::ColHa, t) as i64;
        let r2 = inst.latents.get(Removal::InfHa, t) as i64;
        let r3 = inst.latents.get(Removal::ColCa, t) as i64;
        let r4 = inst.latents.get(Removal::InfCa, t) as i64;
        let new_col = d.new_col_ha[t] as i64;
        let new_inf = d.new_inf_ha[t] as i64;
        if new_inf + r1 > ch {
            return None;
        }
        let terms = [
            (new_col, s, &p_col, &q_col),
            (new_inf, ch, &p_inf, &q_inf),
            (r1, ch, &removal[0].0, &removal[0].1),
            (r2, ih, &removal[1].0, &removal[1].1),
            (r3, cc, &removal[2].0, &removal[2].1),
            (r4, ic, &removal[3].0, &removal[3].1),
        ];
        for (k, pool, pk, qk) in terms {
            if k > pool {
                return None;
            }
            total *= binomial_pmf(k as u64, pool as u64, pk, qk);
        }
        let fl = d.flows[t];
        s = s + fl.admissions as i64 - fl.discharges as i64 - new_col;
        ch = ch + new_col - new_inf - r1;
        ih = ih + new_inf - r2;
        cc = cc + d.new_col_ca[t] as i64 - r3;
        ic = ic + d.new_inf_ca[t] as i64 - r4;
        r += r1 + r2 + r3 + r4;
        if s < 0 || ch < 0 || ih < 0 || cc < 0 || ic < 0 {
            return None;
        }
    }
    Some(total)
}

pub fn exact_log_likelihood(inst: &Instance) -> Option<f64> {
    exact_likelihood(inst).map(|l| ln_rational(&l))
}

fn rate<R: Rng>(rng: &mut R, hi: f64) -> f64 {
    match rng.random_range(0..6) {
        0 => 0.0,
        1 => rng.random_range(1e-9..1e-3),
        _ => rng.random_range(0.0..hi),
    }
}

/// Random feasible instance with `1..=max_months` months and every
/// compartment count at most `max_count` throughout.
pub fn random_instance<R: Rng>(rng: &mut R, max_months: usize, max_count: u64) -> Instance {
    'retry: loop {
        let months = rng.random_range(1..=max_months);
        let init = CompartmentState {
            s: rng.random_range(1..=max_count),
            col_ha: rng.random_range(0..=max_count),
            inf_ha: rng.random_range(0..=max_count),
            col_ca: rng.random_range(0..=max_count),
            inf_ca: rng.random_range(0..=max_count),
            removed: 0,
        };
        let mut st = init;
        let mut data = ObservedDataset::empty(init);
        let mut rem: [Vec<u64>; 4] = Default::default();
        for _ in 0..months {
            let new_col = rng.random_range(0..=st.s);
            let new_inf = rng.random_range(0..=st.col_ha);
            let r1 = rng.random_range(0..=st.col_ha - new_inf);
            let r2 = rng.random_range(0..=st.inf_ha);
            let r3 = rng.random_range(0..=st.col_ca);
            let r4 = rng.random_range(0..=st.inf_ca);
            let new_col_ca = rng.random_range(0..=2);
            let new_inf_ca = rng.random_range(0..=2);
            let discharges = rng.random_range(0..=st.s - new_col);
            let admissions = rng.random_range(0..=2);
            data.new_col_ha.push(new_col);
            data.new_inf_ha.push(new_inf);
            data.new_col_ca.push(new_col_ca);
            data.new_inf_ca.push(new_inf_ca);
            data.flows.push(ExogenousFlows { admissions, discharges });
            for (v, x) in rem.iter_mut().zip([r1, r2, r3, r4]) {
                v.push(x);
            }
            st = CompartmentState {
                s: st.s + admissions - discharges - new_col,
                col_ha: st.col_ha + new_col - new_inf - r1,
                inf_ha: st.inf_ha + new_inf - r2,
                col_ca: st.col_ca + new_col_ca - r3,
                inf_ca: st.inf_ca + new_inf_ca - r4,
                removed: st.removed + r1 + r2 + r3 + r4,
            };
            let counts = [st.s, st.col_ha, st.inf_ha, st.col_ca, st.inf_ca, st.removed];
            if counts.iter().any(|&c| c > max_count) || st.s + st.col_ha + st.inf_ha + st.col_ca + st.inf_ca + st.removed == 0 {
                continue 'retry;
            }
        }
        let [r1, r2, r3, r4] = rem;
        let latents = LatentRemovals::from_series(r1, r2, r3, r4).unwrap();
        let params = ModelParams {
            beta_ch: rate(rng, 3.0),
            beta_ih: rate(rng, 3.0),
            beta_cc: rate(rng, 3.0),
            beta_ic: rate(rng, 3.0),
            sigma: rate(rng, 2.0),
            alpha: rate(rng, 2.0),
        };
        let fixed = FixedRates {
            rho1: rng.random_range(0.05..12.0),
            rho2: rng.random_range(0.05..12.0),
            rho3: rng.random_range(0.05..12.0),
            rho4: rng.random_range(0.05..12.0),
        };
        let mask = ModelMask::from_model_id(rng.random_range(1..=15)).unwrap();
        return Instance {
            data,
            latents,
            params,
            fixed,
            mask,
        };
    }
}
