//! Voting quantities by enumerating every decision pattern.

use crate::quad::integrate;

/// Probability that a given bit pattern occurs when each node fires with `p`.
fn pattern_probability(mask: u32, voters: usize, p: f64) -> f64 {
    (0..voters)
        .map(|i| if mask >> i & 1 == 1 { p } else { 1.0 - p })
        .product()
}

/// `½ P(miss) + ½ P(false alarm)` of the `κ`-out-of-`voters` rule, summed over all
/// `2^voters` patterns.
pub fn error_prob_enumerated(kappa: usize, pd: f64, pfa: f64, voters: usize) -> f64 {
    assert!(voters <= 24, "enumeration is exponential");
    let mut miss = 0.0;
    let mut false_alarm = 0.0;
    for mask in 0u32..(1 << voters) {
        let declared = mask.count_ones() as usize >= kappa;
        if declared {
            false_alarm += pattern_probability(mask, voters, pfa);
        } else {
            miss += pattern_probability(mask, voters, pd);
        }
    }
    0.5 * miss + 0.5 * false_alarm
}

/// Threshold minimizing the enumerated error; the smallest one on ties.
pub fn optimal_kappa_enumerated(pd: f64, pfa: f64, voters: usize) -> usize {
    let mut best = (1, f64::INFINITY);
    for kappa in 1..=voters {
        let e = error_prob_enumerated(kappa, pd, pfa, voters);
        if e < best.1 {
            best = (kappa, e);
        }
    }
    best.0
}

/// `P(Bin(n, p) ≥ κ)` through the regularized incomplete beta integral
/// `n!/((κ−1)!(n−κ)!) ∫₀^p t^{κ−1}(1−t)^{n−κ} dt`.
pub fn binomial_tail_beta(n: usize, kappa: usize, p: f64) -> f64 {
    if kappa == 0 {
        return 1.0;
    }
    if kappa > n {
        return 0.0;
    }
    let ln_coef = ln_fact(n) - ln_fact(kappa - 1) - ln_fact(n - kappa);
    let f = |t: f64| (ln_coef + (kappa - 1) as f64 * t.ln() + (n - kappa) as f64 * (1.0 - t).ln()).exp();
    integrate(f, 0.0, p, 4, 40).clamp(0.0, 1.0)
}

fn ln_fact(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}
