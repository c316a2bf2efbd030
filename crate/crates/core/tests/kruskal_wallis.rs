use mrsa_core::selection::kruskal_wallis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// H from its definition: mid-ranks by counting, tie correction from tie
/// group sizes.
fn reference_h(groups: &[Vec<f64>]) -> f64 {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let rank = |x: f64| {
        let below = pooled.iter().filter(|&&y| y < x).count() as f64;
        let equal = pooled.iter().filter(|&&y| y == x).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let sum: f64 = groups
        .iter()
        .map(|g| {
            let r: f64 = g.iter().map(|&x| rank(x)).sum();
            r * r / g.len() as f64
        })
        .sum();
    let h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
    let mut seen: Vec<f64> = Vec::new();
    let mut ties = 0.0;
    for &x in &pooled {
        if !seen.contains(&x) {
            seen.push(x);
            let t = pooled.iter().filter(|&&y| y == x).count() as f64;
            ties += t * t * t - t;
        }
    }
    h / (1.0 - ties / (n * n * n - n))
}

#[test]
fn matches_reference_on_random_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let k = rng.random_range(2..=12);
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                (0..rng.random_range(1..=8))
                    .map(|_| f64::from(rng.random_range(0..15u8)))
                    .collect()
            })
            .collect();
        let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
        if pooled.iter().all(|&x| x == pooled[0]) {
            continue;
        }
        let got = kruskal_wallis(&groups).unwrap();
        let h = reference_h(&groups);
        assert!((got.h - h).abs() <= 1e-9 * h.max(1.0), "{} vs {h}", got.h);
        let p = 1.0 - ChiSquared::new((k - 1) as f64).unwrap().cdf(h);
        assert!((got.p_value - p).abs() <= 1e-9, "{} vs {p}", got.p_value);
        assert_eq!(got.dof, k - 1);
    }
}
