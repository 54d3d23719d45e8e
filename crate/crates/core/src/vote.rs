//! One-bit decision fusion by voting at the central controller.

use crate::error::{domain, Result};

/// Largest voter count handled with exact integer binomial coefficients.
pub const EXACT_BINOMIAL_LIMIT: usize = 64;

/// Binomial coefficient `C(n, k)`, exact for `n ≤ 64` and via log-gamma sums beyond.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= EXACT_BINOMIAL_LIMIT {
        let mut c: u128 = 1;
        for i in 0..k {
            c = c * (n - i) as u128 / (i + 1) as u128;
        }
        c as f64
    } else {
        let ln: f64 = (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum();
        ln.exp()
    }
}

fn binomial_pmf(n: usize, i: usize, p: f64) -> f64 {
    binomial(n, i) * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32)
}

/// `P(Bin(n, p) ≥ κ)`.
pub fn binomial_tail(n: usize, kappa: usize, p: f64) -> f64 {
    if kappa == 0 {
        return 1.0;
    }
    if kappa > n {
        return 0.0;
    }
    // Sum the shorter side to limit cancellation.
    if kappa > n / 2 {
        (kappa..=n).map(|i| binomial_pmf(n, i, p)).sum::<f64>().min(1.0)
    } else {
        (1.0 - (0..kappa).map(|i| binomial_pmf(n, i, p)).sum::<f64>()).clamp(0.0, 1.0)
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("{name} must lie in [0,1], got {p}"));
    }
    Ok(())
}

fn check_kappa(kappa: usize, voters: usize) -> Result<()> {
    if voters == 0 || kappa == 0 || kappa > voters {
        return domain(format!("voting threshold {kappa} outside 1..={voters}"));
    }
    Ok(())
}

/// Error probability at the fusion center for threshold `κ` and `voters = R + 1` nodes,
/// `Υ = ½ + ½ Σ_{i<κ} C(R+1,i) [P̂_Dⁱ(1−P̂_D)^{R+1−i} − P̂_FAⁱ(1−P̂_FA)^{R+1−i}]`.
pub fn error_prob(kappa: usize, pd_hat: f64, pfa_hat: f64, voters: usize) -> Result<f64> {
    check_kappa(kappa, voters)?;
    check_probability("detection probability", pd_hat)?;
    check_probability("false-alarm probability", pfa_hat)?;
    let sum: f64 = (0..kappa)
        .map(|i| binomial_pmf(voters, i, pd_hat) - binomial_pmf(voters, i, pfa_hat))
        .sum();
    Ok(0.5 + 0.5 * sum)
}

/// `β = ln(P̂_FA / P̂_D) / ln((1 − P̂_D) / (1 − P̂_FA))`.
pub fn beta(pd_hat: f64, pfa_hat: f64) -> Result<f64> {
    if !(pfa_hat > 0.0 && pfa_hat < 1.0) || !(pd_hat > 0.0 && pd_hat <= 1.0) {
        return domain(format!("β needs P̂_D in (0,1] and P̂_FA in (0,1), got {pd_hat}, {pfa_hat}"));
    }
    if pd_hat == pfa_hat {
        return domain("β is undefined when P̂_D equals P̂_FA");
    }
    Ok((pfa_hat / pd_hat).ln() / ((1.0 - pd_hat) / (1.0 - pfa_hat)).ln())
}

/// `κ̃ = min(R+1, ⌈(R+1)/(1+β)⌉)`.
pub fn optimal_kappa(pd_hat: f64, pfa_hat: f64, voters: usize) -> Result<usize> {
    if voters == 0 {
        return domain("at least one voter is required");
    }
    if !(pd_hat > pfa_hat) {
        return domain(format!("optimal threshold needs P̂_D > P̂_FA, got {pd_hat} <= {pfa_hat}"));
    }
    let b = beta(pd_hat, pfa_hat)?;
    let k = (voters as f64 / (1.0 + b)).ceil();
    Ok((k.max(1.0) as usize).min(voters))
}

/// [`optimal_kappa`] extended to `P̂_D ≤ P̂_FA` by its limit `κ̃ = 1` as `P̂_D → P̂_FA`.
pub fn optimal_kappa_or_limit(pd_hat: f64, pfa_hat: f64, voters: usize) -> Result<usize> {
    if pd_hat <= pfa_hat && voters > 0 {
        return Ok(1);
    }
    optimal_kappa(pd_hat, pfa_hat, voters)
}

/// Declares a target when at least `κ` bits are set.
pub fn fuse(bits: &[bool], kappa: usize) -> bool {
    bits.iter().filter(|&&b| b).count() >= kappa
}

/// Fused detection and false-alarm probabilities of the voting rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteOutcome {
    pub kappa: usize,
    pub pd: f64,
    pub pfa: f64,
    pub error: f64,
}

/// Evaluates the voting rule at the optimal threshold for identical nodes.
pub fn vote_outcome(pd_hat: f64, pfa_hat: f64, voters: usize) -> Result<VoteOutcome> {
    let kappa = optimal_kappa_or_limit(pd_hat, pfa_hat, voters)?;
    Ok(VoteOutcome {
        kappa,
        pd: binomial_tail(voters, kappa, pd_hat),
        pfa: binomial_tail(voters, kappa, pfa_hat),
        error: error_prob(kappa, pd_hat, pfa_hat, voters)?,
    })
}

/// `P(Σ D_r ≥ κ)` for independent nodes with individual probabilities `p_r`.
pub fn poisson_binomial_tail(probabilities: &[f64], kappa: usize) -> f64 {
    let mut dist = vec![0.0; probabilities.len() + 1];
    dist[0] = 1.0;
    for (n, &p) in probabilities.iter().enumerate() {
        for i in (0..=n + 1).rev() {
            let stay = dist[i] * (1.0 - p);
            let moved = if i > 0 { dist[i - 1] * p } else { 0.0 };
            dist[i] = stay + moved;
        }
    }
    dist.iter().skip(kappa).sum::<f64>().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let v = error_prob(2, 0.9, 0.1, 3).unwrap();
        assert!((v - 0.028).abs() < 1e-15, "{v}");
    }

    #[test]
    fn indistinguishable_hypotheses() {
        for k in 1..=7 {
            assert!((error_prob(k, 0.3, 0.3, 7).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(64, 32), 1_832_624_140_942_590_534u64 as f64);
        assert_eq!(binomial(5, 7), 0.0);
        assert!((binomial(70, 35) / 1.1218627781666e20 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beta_examples() {
        assert!((beta(0.95, 0.05).unwrap() - 1.0).abs() < 1e-12);
        assert!(beta(1.0 - 1e-12, 0.05).unwrap() < 0.15);
        assert!(beta(0.2, 0.2).is_err());
        assert_eq!(optimal_kappa(0.9, 0.1, 11).unwrap(), 6);
        assert_eq!(optimal_kappa(1.0, 0.1, 11).unwrap(), 11);
        assert!(optimal_kappa(0.1, 0.2, 5).is_err());
        assert_eq!(optimal_kappa_or_limit(0.1, 0.2, 5).unwrap(), 1);
    }

    #[test]
    fn fusion_rule() {
        assert!(!fuse(&[false; 4], 1));
        assert!(fuse(&[true; 4], 4));
        assert!(fuse(&[true, false, true], 2));
        assert!(!fuse(&[true, false, false], 2));
        assert!(error_prob(0, 0.5, 0.1, 3).is_err());
        assert!(error_prob(4, 0.5, 0.1, 3).is_err());
    }

    #[test]
    fn poisson_binomial_matches_binomial_for_equal_nodes() {
        for kappa in 0..=6 {
            let a = poisson_binomial_tail(&[0.37; 5], kappa);
            let b = binomial_tail(5, kappa, 0.37);
            assert!((a - b).abs() < 1e-14);
        }
    }
}
