#[path = "support/oracle.rs"]
mod oracle;

use mrsa_core::inference::{initial_latents, update_latent_removals};
use mrsa_core::likelihood::{LatentRemovals, Removal};
use mrsa_core::model::{CompartmentState, ExogenousFlows, FixedRates, ModelMask, ModelParams};
use mrsa_core::stats::effective_sample_size;
use mrsa_core::ObservedDataset;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy() -> oracle::Instance {
    let data = ObservedDataset {
        init: CompartmentState {
            s: 6,
            col_ha: 3,
            inf_ha: 2,
            col_ca: 2,
            inf_ca: 1,
            removed: 0,
        },
        new_col_ha: vec![1, 2],
        new_inf_ha: vec![1, 1],
        new_col_ca: vec![1, 0],
        new_inf_ca: vec![0, 1],
        flows: vec![
            ExogenousFlows {
                admissions: 1,
                discharges: 1,
            },
            ExogenousFlows {
                admissions: 0,
                discharges: 1,
            },
        ],
    };
    oracle::Instance {
        latents: LatentRemovals::zeros(2),
        data,
        params: ModelParams {
            beta_ch: 0.4,
            beta_ih: 0.3,
            beta_cc: 0.2,
            beta_ic: 0.1,
            sigma: 0.05,
            alpha: 0.35,
        },
        fixed: FixedRates {
            rho1: 0.6,
            rho2: 0.9,
            rho3: 0.7,
            rho4: 1.1,
        },
        mask: ModelMask::FULL,
    }
}

fn boxes(bounds: [u64; 4]) -> Vec<[u64; 4]> {
    let mut out = Vec::new();
    for a in 0..=bounds[0] {
        for b in 0..=bounds[1] {
            for c in 0..=bounds[2] {
                for d in 0..=bounds[3] {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

/// Exact marginal posterior of every latent coordinate, indexed
/// `[removal][month][value]`, by summing the joint over all feasible
/// configurations.
fn enumerate(inst: &oracle::Instance) -> Vec<Vec<Vec<f64>>> {
    let d = &inst.data;
    let mut inst = oracle::Instance {
        latents: LatentRemovals::zeros(2),
        data: d.clone(),
        ..*inst
    };
    let init = d.init;
    let first = [init.col_ha - d.new_inf_ha[0], init.inf_ha, init.col_ca, init.inf_ca];
    let mut marg = vec![vec![vec![BigRational::zero(); 16]; 2]; 4];
    let mut total = BigRational::zero();
    for r0 in boxes(first) {
        let col_ha = init.col_ha + d.new_col_ha[0] - d.new_inf_ha[0] - r0[0];
        let second = [
            col_ha.saturating_sub(d.new_inf_ha[1]),
            init.inf_ha + d.new_inf_ha[0] - r0[1],
            init.col_ca + d.new_col_ca[0] - r0[2],
            init.inf_ca + d.new_inf_ca[0] - r0[3],
        ];
        for r1 in boxes(second) {
            for (i, which) in Removal::ALL.into_iter().enumerate() {
                inst.latents.set(which, 0, r0[i]);
                inst.latents.set(which, 1, r1[i]);
            }
            let Some(w) = oracle::exact_likelihood(&inst) else {
                continue;
            };
            for i in 0..4 {
                marg[i][0][r0[i] as usize] += &w;
                marg[i][1][r1[i] as usize] += &w;
            }
            total += w;
        }
    }
    marg.iter()
        .map(|m| {
            m.iter()
                .map(|v| v.iter().map(|x| (x / &total).to_f64().unwrap()).collect())
                .collect()
        })
        .collect()
}

#[test]
fn sweeps_match_enumerated_latent_posterior() {
    let inst = toy();
    let exact = enumerate(&inst);
    let mut latents = initial_latents(&inst.data, &inst.fixed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 100_000;
    let mut trace: Vec<[[u64; 2]; 4]> = Vec::with_capacity(n);
    for _ in 0..1000 {
        latents = update_latent_removals(&latents, &inst.data, &inst.params, &inst.fixed, inst.mask, &mut rng).unwrap();
    }
    for _ in 0..n {
        latents = update_latent_removals(&latents, &inst.data, &inst.params, &inst.fixed, inst.mask, &mut rng).unwrap();
        trace.push(std::array::from_fn(|i| [latents.get(Removal::ALL[i], 0), latents.get(Removal::ALL[i], 1)]));
    }
    for which in Removal::ALL {
        let k = if which == Removal::ColHa { 3.0 } else { 4.0 };
        for t in 0..2 {
            for (v, &p) in exact[which.index()][t].iter().enumerate() {
                let ind: Vec<f64> = trace
                    .iter()
                    .map(|s| f64::from(u8::from(s[which.index()][t] == v as u64)))
                    .collect();
                let freq = ind.iter().sum::<f64>() / n as f64;
                if p == 0.0 {
                    assert_eq!(freq, 0.0, "{which:?} month {t} value {v}");
                    continue;
                }
                let ess = effective_sample_size(&ind).value;
                let se = (p * (1.0 - p) / ess).sqrt();
                assert!(
                    (freq - p).abs() <= k * se,
                    "{which:?} month {t} value {v}: frequency {freq:.4}, exact {p:.4}, se {se:.4}"
                );
            }
        }
    }
}
