//! Small numerical helpers shared by the likelihood, the sampler and the
//! model-comparison code.

use alloc::vec::Vec;

/// `ln(n!)` for `n <= 20`, from the exact integer factorial.
const fn exact_factorial(n: u64) -> u64 {
    let mut acc = 1u64;
    let mut i = 2;
    while i <= n {
        acc *= i;
        i += 1;
    }
    acc
}

pub(crate) const EXACT_FACTORIAL_LIMIT: u64 = 20;

/// `ln(n!)`: exact integer factorial below 20, log-gamma above.
pub fn ln_factorial(n: u64) -> f64 {
    if n < EXACT_FACTORIAL_LIMIT {
        libm::log(exact_factorial(n) as f64)
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

/// `ln C(n, k)`. Caller guarantees `k <= n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Lazily grown table of `ln(n!)`, filled with [`ln_factorial`] so table and
/// direct evaluation agree bitwise.
#[derive(Debug, Clone, Default)]
pub struct LnFactorials {
    table: Vec<f64>,
}

impl LnFactorials {
    pub fn with_capacity(max_n: u64) -> Self {
        let mut t = LnFactorials::default();
        t.reserve(max_n);
        t
    }

    pub fn reserve(&mut self, max_n: u64) {
        let want = max_n as usize + 1;
        while self.table.len() < want {
            let n = self.table.len() as u64;
            self.table.push(ln_factorial(n));
        }
    }

    #[inline]
    pub fn get(&self, n: u64) -> f64 {
        match self.table.get(n as usize) {
            Some(v) => *v,
            None => ln_factorial(n),
        }
    }

    #[inline]
    pub fn ln_choose(&self, n: u64, k: u64) -> f64 {
        if k == 0 || k == n {
            return 0.0;
        }
        self.get(n) - self.get(k) - self.get(n - k)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator; zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Linear-interpolation quantile (Hyndman–Fan type 7) of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `ln(sum(exp(xs)))`, max-shifted.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + libm::log(xs.iter().map(|x| libm::exp(x - m)).sum::<f64>())
}

/// Regularized upper incomplete gamma function `Q(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let ln_prefix = a * libm::log(x) - x - libm::lgamma(a);
    if x < a + 1.0 {
        // series for P(a, x)
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..1000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if libm::fabs(term) < libm::fabs(sum) * 1e-16 {
                break;
            }
        }
        1.0 - sum * libm::exp(ln_prefix)
    } else {
        // modified Lentz continued fraction for Q(a, x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if libm::fabs(d) < tiny {
                d = tiny;
            }
            c = b + an / c;
            if libm::fabs(c) < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if libm::fabs(delta - 1.0) < 1e-16 {
                break;
            }
        }
        libm::exp(ln_prefix) * h
    }
}

/// Upper tail of the chi-squared distribution.
pub fn chi_squared_sf(x: f64, dof: f64) -> f64 {
    regularized_gamma_q(dof / 2.0, x / 2.0)
}

/// Autocovariance at `lag` with the `1/n` normalisation.
fn autocovariance(xs: &[f64], m: f64, lag: usize) -> f64 {
    let n = xs.len();
    xs[..n - lag]
        .iter()
        .zip(&xs[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / n as f64
}

/// Effective sample size of one chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ess {
    pub value: f64,
    /// All draws identical; `value` is then the chain length.
    pub degenerate: bool,
}

/// Effective sample size via Geyer's initial positive sequence: sums of
/// adjacent autocorrelation pairs are accumulated until the first
/// non-positive pair. The result is clamped to `(0, n]`.
pub fn effective_sample_size(xs: &[f64]) -> Ess {
    let n = xs.len();
    if n == 0 {
        return Ess {
            value: 0.0,
            degenerate: true,
        };
    }
    let m = mean(xs);
    let c0 = autocovariance(xs, m, 0);
    if !(c0 > 0.0) || n < 4 {
        return Ess {
            value: n as f64,
            degenerate: !(c0 > 0.0),
        };
    }
    let mut tau = -1.0;
    let mut k = 0;
    while k + 1 < n {
        let pair = (autocovariance(xs, m, k) + autocovariance(xs, m, k + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    let value = if tau > 0.0 { n as f64 / tau } else { n as f64 };
    Ess {
        value: value.min(n as f64),
        degenerate: false,
    }
}

/// Mid-ranks (1-based) of `xs`, averaging ties.
pub fn mid_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| xs[*a].total_cmp(&xs[*b]));
    let mut ranks = alloc::vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for idx in &order[i..=j] {
            ranks[*idx] = r;
        }
        i = j + 1;
    }
    ranks
}
