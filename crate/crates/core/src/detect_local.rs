//! Per-node GLRT for the limited-backhaul regime.
//!
//! Each node matched-filters its `L` slots with the shared symbol block, whitens
//! against its interference-plus-noise covariance and forwards a single bit.
//! The vectorized covariance is block diagonal with `K+1` identical `N × N`
//! blocks `Q̃ = G Ŵ Gᴴ + σ² I`, so all whitening is done per block.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, complex_normal_matrix, trace_re, CMatrix, CVector, C64};
use crate::precoding::PrecoderSet;
use crate::scenario::steering;
use crate::stats::{noncentral_chi2_sf_2dof, threshold_from_pfa};

/// `Q̃ = G Ŵ Gᴴ + σ² I`; `g = None` gives the BS's `σ² I`.
pub fn interference_cov(g: Option<&CMatrix>, w_hat: &CMatrix, sigma_ns2: f64, antennas: usize) -> CMatrix {
    let mut q = match g {
        Some(g) => g * w_hat * g.adjoint(),
        None => CMatrix::zeros(antennas, antennas),
    };
    for i in 0..antennas {
        q[(i, i)] += C64::new(sigma_ns2, 0.0);
    }
    q
}

/// Detector state of one node.
#[derive(Debug, Clone)]
pub struct LocalDetector {
    /// 0 for the BS, `r ≥ 1` for RAPs.
    pub node: usize,
    pub q_tilde: CMatrix,
    pub q_inv: CMatrix,
    /// Whitening factor with `U Uᴴ = Q̃⁻¹`.
    pub u: CMatrix,
    /// Threshold on `2 ln Λ_r`.
    pub zeta: f64,
    pub rho: f64,
}

impl LocalDetector {
    pub fn new(
        node: usize,
        b: &CMatrix,
        q_tilde: CMatrix,
        w_hat: &CMatrix,
        slots: usize,
        sigma_rcs2: f64,
        pfa: f64,
    ) -> Result<Self> {
        let chol = cholesky(&q_tilde)?;
        let l_inv = chol
            .l()
            .solve_lower_triangular(&CMatrix::identity(q_tilde.nrows(), q_tilde.nrows()))
            .ok_or_else(|| Error::Numeric("triangular factor is singular".into()))?;
        let u = l_inv.adjoint();
        let q_inv = &u * u.adjoint();
        Ok(Self {
            node,
            rho: noncentrality_with_inverse(b, w_hat, &q_inv, slots, sigma_rcs2),
            zeta: threshold_from_pfa(pfa)?,
            q_tilde,
            q_inv,
            u,
        })
    }

    /// Wilks-scaled statistic `2 ln Λ_r` at known angles.
    pub fn statistic(&self, z_tilde: &CMatrix, precoders: &PrecoderSet, b_hat: &CMatrix) -> Result<f64> {
        Ok(2.0 * local_glrt(z_tilde, precoders, b_hat, &self.q_inv)?)
    }

    /// Precomputes the statistic for a fixed precoder and node response.
    pub fn filter(&self, precoders: &PrecoderSet, b_hat: &CMatrix) -> Result<LocalFilter> {
        LocalFilter::new(precoders, b_hat, &self.q_inv)
    }

    pub fn decide(&self, statistic: f64) -> bool {
        local_decision(statistic, self.zeta)
    }

    pub fn analytic_pd(&self) -> Result<f64> {
        noncentral_chi2_sf_2dof(self.zeta, self.rho)
    }
}

/// `Z̃ = (1/√L) Σ_l z[l] S[l]ᴴ`.
pub fn matched_filter(z: &CMatrix, symbols: &CMatrix) -> Result<CMatrix> {
    if z.ncols() != symbols.ncols() {
        return Err(Error::Dimension(format!(
            "{} observed slots but {} symbol slots",
            z.ncols(),
            symbols.ncols()
        )));
    }
    Ok(z * symbols.adjoint() / C64::new((z.ncols() as f64).sqrt(), 0.0))
}

/// Draws `z[l] = α B X[l] + G X[l] + n[l]` for one node over all slots.
pub fn simulate_local_observation<R: Rng + ?Sized>(
    b: &CMatrix,
    g: Option<&CMatrix>,
    x: &CMatrix,
    alpha: Option<C64>,
    sigma_ns2: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    if b.ncols() != x.nrows() || g.is_some_and(|g| g.shape() != b.shape()) {
        return Err(Error::Dimension("node response and transmit block do not conform".into()));
    }
    let mut z = complex_normal_matrix(rng, b.nrows(), x.ncols(), sigma_ns2);
    if let Some(a) = alpha {
        z += b * x * a;
    }
    if let Some(g) = g {
        z += g * x;
    }
    Ok(z)
}

/// `ln Λ_r = |tr(Z̃ Wᴴ B̂ᴴ Q̃⁻¹)|² / tr(B̂ Ŵ B̂ᴴ Q̃⁻¹)`.
pub fn local_glrt(z_tilde: &CMatrix, precoders: &PrecoderSet, b_hat: &CMatrix, q_inv: &CMatrix) -> Result<f64> {
    if z_tilde.ncols() != precoders.streams() || z_tilde.nrows() != b_hat.nrows() {
        return Err(Error::Dimension("matched-filter output does not match the node".into()));
    }
    let den = trace_re(&(b_hat * &precoders.w_hat * b_hat.adjoint() * q_inv));
    if !(den > 0.0) {
        return Err(Error::Degenerate("node receives no beam energy".into()));
    }
    let num = (z_tilde * precoders.w.adjoint() * b_hat.adjoint() * q_inv).trace();
    Ok(num.norm_sqr() / den)
}

/// `2 ln Λ_r` with `Wᴴ B̂ᴴ Q̃⁻¹` and the denominator evaluated once.
#[derive(Debug, Clone)]
pub struct LocalFilter {
    f: CMatrix,
    den: f64,
}

impl LocalFilter {
    pub fn new(precoders: &PrecoderSet, b_hat: &CMatrix, q_inv: &CMatrix) -> Result<Self> {
        let den = trace_re(&(b_hat * &precoders.w_hat * b_hat.adjoint() * q_inv));
        if !(den > 0.0) {
            return Err(Error::Degenerate("node receives no beam energy".into()));
        }
        Ok(Self { f: precoders.w.adjoint() * b_hat.adjoint() * q_inv, den })
    }

    pub fn statistic(&self, z_tilde: &CMatrix) -> Result<f64> {
        if z_tilde.shape() != (self.f.ncols(), self.f.nrows()) {
            return Err(Error::Dimension("matched-filter output does not match the node".into()));
        }
        let num: C64 = z_tilde.iter().zip(self.f.transpose().iter()).map(|(a, b)| a * b).sum();
        Ok(2.0 * num.norm_sqr() / self.den)
    }
}

/// Angle search grid for unknown-angle operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleGrid {
    pub step_rad: f64,
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self { step_rad: PI / 180.0 }
    }
}

impl AngleGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = (2.0 * PI / self.step_rad).round().max(1.0) as usize;
        (0..n).map(|i| -PI + (i as f64 + 1.0) * 2.0 * PI / n as f64).collect()
    }
}

/// Estimated angles and the maximized statistic of a grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridEstimate {
    pub phi: f64,
    pub theta: f64,
    pub ln_lambda: f64,
}

/// Maximizes `ln Λ_r` over receive angle `φ` and transmit angle `θ`.
///
/// With `B̂ = b(φ) a(θ)ᴴ`, the numerator is `|b(φ)ᴴ Y a(θ)|²` with `Y = Q̃⁻¹ Z̃ Wᴴ`
/// and the denominator factors as `(a(θ)ᴴ Ŵ a(θ)) (b(φ)ᴴ Q̃⁻¹ b(φ))`.
/// For the BS (`monostatic`), `φ = θ`.
pub fn local_glrt_grid(
    z_tilde: &CMatrix,
    precoders: &PrecoderSet,
    q_inv: &CMatrix,
    delta: f64,
    grid: &AngleGrid,
    monostatic: bool,
) -> Result<GridEstimate> {
    let n = z_tilde.nrows();
    let m = precoders.antennas();
    let y = q_inv * z_tilde * precoders.w.adjoint();
    let angles = grid.points();
    let tx: Vec<(CVector, f64)> = angles
        .iter()
        .map(|&t| {
            let a = steering(t, m, delta);
            let e = a.dotc(&(&precoders.w_hat * &a)).re;
            (a, e)
        })
        .collect();
    let rx: Vec<(CVector, f64)> = angles
        .iter()
        .map(|&p| {
            let b = steering(p, n, delta);
            let e = b.dotc(&(q_inv * &b)).re;
            (b, e)
        })
        .collect();
    let mut best = GridEstimate { phi: 0.0, theta: 0.0, ln_lambda: f64::NEG_INFINITY };
    for (i, (b, eb)) in rx.iter().enumerate() {
        let by = b.adjoint() * &y;
        let thetas: Box<dyn Iterator<Item = usize>> = if monostatic { Box::new(std::iter::once(i)) } else { Box::new(0..angles.len()) };
        for j in thetas {
            let (a, ea) = &tx[j];
            let den = ea * eb;
            if den <= 0.0 {
                continue;
            }
            let v = (&by * a)[(0, 0)].norm_sqr() / den;
            if v > best.ln_lambda {
                best = GridEstimate { phi: angles[i], theta: angles[j], ln_lambda: v };
            }
        }
    }
    if !best.ln_lambda.is_finite() {
        return Err(Error::Degenerate("no grid point receives beam energy".into()));
    }
    Ok(best)
}

/// `α̂ = dᴴ C⁻¹ z̃ / dᴴ C⁻¹ d` for a vectorized observation.
pub fn mle_alpha_local(z_tilde: &CVector, d: &CVector, c_inv: &CMatrix) -> Result<C64> {
    let cd = c_inv * d;
    let den = d.dotc(&cd).re;
    if !(den > 0.0) {
        return Err(Error::Degenerate("zero steering energy".into()));
    }
    Ok(cd.dotc(z_tilde) / den)
}

/// Block-structured form of [`mle_alpha_local`] for a matched-filter output
/// `Z̃ = √L α B W + E`, returning the estimate of `α`.
pub fn mle_alpha_matched(
    z_tilde: &CMatrix,
    precoders: &PrecoderSet,
    b: &CMatrix,
    q_inv: &CMatrix,
    slots: usize,
) -> Result<C64> {
    let bw = b * &precoders.w;
    let den = trace_re(&(bw.adjoint() * q_inv * &bw));
    if !(den > 0.0) {
        return Err(Error::Degenerate("zero steering energy".into()));
    }
    let num = (bw.adjoint() * q_inv * z_tilde).trace();
    Ok(num / (den * (slots as f64).sqrt()))
}

fn noncentrality_with_inverse(b: &CMatrix, w_hat: &CMatrix, q_inv: &CMatrix, slots: usize, sigma_rcs2: f64) -> f64 {
    sigma_rcs2 * slots as f64 * trace_re(&(b * w_hat * b.adjoint() * q_inv))
}

/// `ρ_r = σ_rcs² L tr(B Ŵ Bᴴ Q̃⁻¹)`.
pub fn noncentrality_local(b: &CMatrix, w_hat: &CMatrix, q_tilde: &CMatrix, slots: usize, sigma_rcs2: f64) -> Result<f64> {
    let q_inv = cholesky(q_tilde)?.inverse();
    Ok(noncentrality_with_inverse(b, w_hat, &q_inv, slots, sigma_rcs2))
}

/// One-bit decision, with ties going to the target-present hypothesis.
pub fn local_decision(statistic: f64, zeta: f64) -> bool {
    statistic >= zeta
}
