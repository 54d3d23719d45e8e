//! Chi-square detection kernel.
//!
//! The GLRT statistics in this crate are mapped to detection probabilities
//! through the noncentral chi-square law with two degrees of freedom. The
//! survival function is the first-order Marcum Q function `Q1(sqrt(rho), sqrt(xi))`,
//! evaluated here by expanding the Bessel function of its integral form into the
//! Poisson-weighted series
//!
//! ```text
//! Q1 = sum_j Pois(j; rho/2) * P(Pois(xi/2) <= j)
//! ```
//!
//! which converges for every argument and is summed only across the window
//! where the Poisson weights are not negligible. Even degrees of freedom
//! (`2n`) follow from the same series with the inner bound shifted by `n - 1`;
//! they are needed for the exact null law of the stacked multi-receiver statistic.

use crate::error::{domain, Result};

/// Hypothesis label attached to a simulated test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Target absent.
    Null,
    /// Target present.
    Alternative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledStatistic {
    pub value: f64,
    pub hypothesis: Hypothesis,
}

/// Operating point of a 2-DoF detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionCurve {
    pub rho: f64,
    pub xi: f64,
    pub pfa: f64,
    pub pd: f64,
}

impl DetectionCurve {
    pub fn new(rho: f64, pfa: f64) -> Result<Self> {
        let xi = threshold_from_pfa(pfa)?;
        let pd = noncentral_chi2_sf_2dof(xi, rho)?;
        Ok(Self { rho, xi, pfa, pd })
    }
}

/// Threshold of a 2-DoF central chi-square at tail probability `pfa`: `-2 ln(pfa)`.
pub fn threshold_from_pfa(pfa: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return domain(format!("false-alarm probability must lie in (0,1), got {pfa}"));
    }
    Ok(-2.0 * pfa.ln())
}

pub fn chi2_cdf_2dof(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-0.5 * x).exp_m1()
    }
}

/// Survival function of the central chi-square with `2 * half_dof` degrees of freedom.
pub fn chi2_sf_even(x: f64, half_dof: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    PoissonCdf::new(0.5 * x).upto(half_dof.saturating_sub(1))
}

/// Inverse of [`chi2_sf_even`]: the threshold whose exceedance probability is `pfa`.
pub fn threshold_even_dof(pfa: f64, half_dof: usize) -> Result<f64> {
    if half_dof == 0 {
        return domain("degrees of freedom must be positive");
    }
    if half_dof == 1 {
        return threshold_from_pfa(pfa);
    }
    if !(pfa > 0.0 && pfa < 1.0) {
        return domain(format!("false-alarm probability must lie in (0,1), got {pfa}"));
    }
    let (mut lo, mut hi) = (0.0, 2.0 * half_dof as f64 + 10.0);
    while chi2_sf_even(hi, half_dof) > pfa {
        lo = hi;
        hi *= 2.0;
    }
    // Newton steps in log space, safeguarded by the bracket.
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let sf = chi2_sf_even(x, half_dof);
        if sf > pfa {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = 0.5 * poisson_pmf(half_dof - 1, 0.5 * x);
        let mut next = if pdf > 0.0 && sf > 0.0 {
            x + sf * (sf.ln() - pfa.ln()) / pdf
        } else {
            f64::NAN
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Survival function of the noncentral chi-square with 2 DoF, i.e. the
/// detection probability `P_D = 1 - F(xi; rho)`.
pub fn noncentral_chi2_sf_2dof(xi: f64, rho: f64) -> Result<f64> {
    noncentral_chi2_sf_even(xi, rho, 1)
}

/// Survival function of the noncentral chi-square with `2 * half_dof` DoF
/// (generalized Marcum Q of order `half_dof`).
pub fn noncentral_chi2_sf_even(xi: f64, rho: f64, half_dof: usize) -> Result<f64> {
    if !(xi >= 0.0) || !(rho >= 0.0) {
        return domain(format!("threshold and noncentrality must be nonnegative, got xi={xi}, rho={rho}"));
    }
    if half_dof == 0 {
        return domain("degrees of freedom must be positive");
    }
    if xi == 0.0 {
        return Ok(1.0);
    }
    if rho == 0.0 {
        return Ok(chi2_sf_even(xi, half_dof));
    }
    if rho.is_infinite() {
        return Ok(1.0);
    }
    // Q_n(a, b) ≥ 1 - exp(-(a-b)^2/2) for a > b; beyond 40 the deficit is below 1e-300.
    if rho.sqrt() - xi.sqrt() > 40.0 {
        return Ok(1.0);
    }
    let mu = 0.5 * rho;
    let spread = 12.0 * mu.sqrt() + 40.0;
    let j_lo = (mu - spread).max(0.0).floor() as usize;
    let j_hi = (mu + spread).ceil() as usize;

    let inner = PoissonCdf::new(0.5 * xi);
    let mut cdf = inner.upto(j_lo + half_dof - 1);
    let mut m = j_lo + half_dof - 1;
    let mut sum = 0.0;
    for j in j_lo..=j_hi {
        let target = j + half_dof - 1;
        while m < target {
            m += 1;
            cdf += inner.pmf(m);
        }
        sum += poisson_pmf(j, mu) * cdf.min(1.0);
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Detection probability of the Wilks-scaled stacked statistic `2 ln Λ` for a
/// Swerling-I target with `branches` independent, equal-energy receive branches.
///
/// Each branch contributes `(1 + s) * chi2_2` with `s = mean_noncentrality / (2 * branches)`,
/// so the statistic is a scaled central chi-square with `2 * branches` DoF.
pub fn swerling1_detection_probability(xi: f64, mean_noncentrality: f64, branches: usize) -> Result<f64> {
    if branches == 0 || !(mean_noncentrality >= 0.0) || !(xi >= 0.0) {
        return domain("invalid Swerling-I arguments");
    }
    let s = mean_noncentrality / (2.0 * branches as f64);
    Ok(chi2_sf_even(xi / (1.0 + s), branches))
}

/// Binomial estimate of an exceedance rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    pub stderr: f64,
    pub count: usize,
}

impl RateEstimate {
    fn from_counts(hits: usize, count: usize) -> Self {
        let rate = hits as f64 / count as f64;
        Self {
            rate,
            stderr: (rate * (1.0 - rate) / count as f64).sqrt(),
            count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalRates {
    /// Exceedance rate under the null hypothesis, if any null samples were given.
    pub pfa: Option<RateEstimate>,
    /// Exceedance rate under the alternative hypothesis, if any were given.
    pub pd: Option<RateEstimate>,
}

/// Fraction of samples at or above `xi`, per hypothesis.
pub fn empirical_pfa_pd(samples: &[LabeledStatistic], xi: f64) -> Result<EmpiricalRates> {
    if samples.is_empty() {
        return domain("empirical rates need at least one sample");
    }
    let mut counts = [(0usize, 0usize); 2];
    for s in samples {
        let slot = match s.hypothesis {
            Hypothesis::Null => 0,
            Hypothesis::Alternative => 1,
        };
        counts[slot].1 += 1;
        if s.value >= xi {
            counts[slot].0 += 1;
        }
    }
    let est = |(hits, n): (usize, usize)| (n > 0).then(|| RateEstimate::from_counts(hits, n));
    Ok(EmpiricalRates {
        pfa: est(counts[0]),
        pd: est(counts[1]),
    })
}

const LN_FACTORIAL_TABLE: usize = 256;

fn ln_factorial(k: usize) -> f64 {
    static TABLE: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    if k < LN_FACTORIAL_TABLE {
        let table = TABLE.get_or_init(|| {
            let mut t = vec![0.0; LN_FACTORIAL_TABLE];
            for i in 1..LN_FACTORIAL_TABLE {
                t[i] = t[i - 1] + (i as f64).ln();
            }
            t
        });
        table[k]
    } else {
        let n = k as f64 + 1.0;
        // ln Γ(n) by Stirling with three correction terms.
        (n - 0.5) * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * n)
            - 1.0 / (360.0 * n.powi(3))
            + 1.0 / (1260.0 * n.powi(5))
    }
}

fn poisson_pmf(k: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (-mean + k as f64 * mean.ln() - ln_factorial(k)).exp()
}

/// Cumulative Poisson probabilities for a fixed mean.
struct PoissonCdf {
    mean: f64,
}

impl PoissonCdf {
    fn new(mean: f64) -> Self {
        Self { mean }
    }

    fn pmf(&self, k: usize) -> f64 {
        poisson_pmf(k, self.mean)
    }

    fn upto(&self, k: usize) -> f64 {
        (0..=k).map(|i| self.pmf(i)).sum::<f64>().min(1.0)
    }
}
