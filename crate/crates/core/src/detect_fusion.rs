//! Centralized signal-fusion GLRT for the unlimited-backhaul regime.
//!
//! Every receiver `r` (the BS at `r = 0`, RAPs at `r ≥ 1`) observes
//! `z_r[l] = α_r B_r X[l] + n_r[l]` with `B_r = b_r aᴴ(θ)`. The central controller
//! stacks all observations, so `A[l]` is block diagonal with one column per
//! receiver and the least-squares problem decouples receiver by receiver.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{complex_normal_matrix, trace_re, CMatrix, CVector, C64};
use crate::precoding::PrecoderSet;
use crate::scenario::{ChannelSet, FusionNormalization};
use crate::stats::{noncentral_chi2_sf_2dof, threshold_even_dof};

/// Rank-one target responses `B_r = b_r a(θ)ᴴ`, BS first.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel {
    pub b: Vec<CMatrix>,
}

impl StackedModel {
    pub fn from_channels(channels: &ChannelSet) -> Self {
        let a_h = channels.a_theta.adjoint();
        let mut b = vec![&channels.b0_theta * &a_h];
        b.extend(channels.b1_phi.iter().map(|v| v * &a_h));
        Self { b }
    }

    pub fn receivers(&self) -> usize {
        self.b.len()
    }

    /// Stacked receive dimension per slot.
    pub fn stacked_dim(&self) -> usize {
        self.b.iter().map(|m| m.nrows()).sum()
    }

    /// Known signal part `A_r = B_r X`, one `N_r × L` block per receiver.
    pub fn known_blocks(&self, x: &CMatrix) -> Vec<CMatrix> {
        self.b.iter().map(|b| b * x).collect()
    }

    /// Received energy factors `tr(B_r Ŵ B_rᴴ)` per receiver.
    pub fn receiver_energies(&self, w_hat: &CMatrix) -> Vec<f64> {
        self.b.iter().map(|b| trace_re(&(b * w_hat * b.adjoint()))).collect()
    }
}

/// `(K+1) × L` symbol block with `S Sᴴ = L I`, drawn as white Gaussian
/// symbols and orthonormalized.
pub fn draw_symbols<R: Rng + ?Sized>(streams: usize, slots: usize, rng: &mut R) -> Result<CMatrix> {
    if slots < streams {
        return Err(Error::Dimension(format!(
            "{streams} streams need at least as many slots, got {slots}"
        )));
    }
    let g = complex_normal_matrix(rng, slots, streams, 1.0);
    let q = g.qr().q();
    Ok(q.adjoint() * C64::new((slots as f64).sqrt(), 0.0))
}

/// Transmitted block `X = W S`.
pub fn transmit_block(precoders: &PrecoderSet, symbols: &CMatrix) -> CMatrix {
    &precoders.w * symbols
}

/// Per-receiver slot observations, each `N_r × L` with slots as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub z: Vec<CMatrix>,
}

/// Draws `z_r[l] = α_r B_r X[l] + n_r[l]`, or pure noise when `alpha` is `None`.
///
/// The target-free term `G_r X` is left out: at the central controller it is
/// assumed removed before fusion.
pub fn simulate_observation<R: Rng + ?Sized>(
    model: &StackedModel,
    x: &CMatrix,
    alpha: Option<&[C64]>,
    sigma_ns2: f64,
    rng: &mut R,
) -> Result<Observations> {
    if let Some(a) = alpha {
        if a.len() != model.receivers() {
            return Err(Error::Dimension(format!(
                "{} gains for {} receivers",
                a.len(),
                model.receivers()
            )));
        }
    }
    let z = model
        .b
        .iter()
        .enumerate()
        .map(|(r, b)| {
            if b.ncols() != x.nrows() {
                return Err(Error::Dimension("B_r and X do not conform".into()));
            }
            let mut z = complex_normal_matrix(rng, b.nrows(), x.ncols(), sigma_ns2);
            if let Some(a) = alpha {
                z += b * x * a[r];
            }
            Ok(z)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Observations { z })
}

fn check_blocks(obs: &Observations, blocks: &[CMatrix]) -> Result<()> {
    if obs.z.len() != blocks.len()
        || obs.z.iter().zip(blocks).any(|(z, a)| z.shape() != a.shape())
    {
        return Err(Error::Dimension("observations and known blocks do not conform".into()));
    }
    Ok(())
}

/// Per-receiver correlations `Σ_l A_r[l]ᴴ z_r[l]` and energies `Σ_l ‖A_r[l]‖²`.
fn sufficient_statistics(obs: &Observations, blocks: &[CMatrix]) -> Result<Vec<(C64, f64)>> {
    check_blocks(obs, blocks)?;
    obs.z
        .iter()
        .zip(blocks)
        .enumerate()
        .map(|(r, (z, a))| {
            let energy = a.norm_squared();
            if !(energy > 0.0) {
                return Err(Error::Numeric(format!(
                    "normal matrix is singular: receiver {r} sees no transmit energy"
                )));
            }
            Ok((a.dotc(z), energy))
        })
        .collect()
}

/// Least-squares estimate `(Σ AᴴA)⁻¹ Σ Aᴴz`.
pub fn estimate_alpha(obs: &Observations, blocks: &[CMatrix]) -> Result<Vec<C64>> {
    Ok(sufficient_statistics(obs, blocks)?
        .into_iter()
        .map(|(corr, energy)| corr / energy)
        .collect())
}

/// `ln Λ = (1/σ²) (Σ zᴴA)(Σ AᴴA)⁻¹(Σ Aᴴz)`.
///
/// Under the null hypothesis `2 ln Λ` is central chi-square with `2(R+1)` degrees of freedom.
pub fn glrt_statistic(obs: &Observations, blocks: &[CMatrix], sigma_ns2: f64) -> Result<f64> {
    Ok(sufficient_statistics(obs, blocks)?
        .into_iter()
        .map(|(corr, energy)| corr.norm_sqr() / energy)
        .sum::<f64>()
        / sigma_ns2)
}

/// Which receivers contribute to a fused statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiverSet {
    /// BS and all RAPs.
    All,
    /// BS echo only.
    Active,
    /// RAPs only.
    Passive,
}

impl ReceiverSet {
    pub fn contains(self, r: usize) -> bool {
        match self {
            ReceiverSet::All => true,
            ReceiverSet::Active => r == 0,
            ReceiverSet::Passive => r > 0,
        }
    }
}

/// Noncentrality of the fused statistic.
///
/// With [`FusionNormalization::PerReceiver`],
/// `ρ = L σ_rcs² / σ² · Σ_r tr(B_r Ŵ B_rᴴ)`; with [`FusionNormalization::Pooled`]
/// the sum is further divided by the pooled antenna count of the included receivers.
pub fn noncentrality_fusion(
    model: &StackedModel,
    w_hat: &CMatrix,
    slots: usize,
    sigma_rcs2: f64,
    sigma_ns2: f64,
    normalization: FusionNormalization,
    receivers: ReceiverSet,
) -> f64 {
    let energies = model.receiver_energies(w_hat);
    let mut sum = 0.0;
    let mut antennas = 0usize;
    for (r, (e, b)) in energies.iter().zip(&model.b).enumerate() {
        if receivers.contains(r) {
            sum += e;
            antennas += b.nrows();
        }
    }
    let scale = slots as f64 * sigma_rcs2 / sigma_ns2;
    match normalization {
        FusionNormalization::PerReceiver => scale * sum,
        FusionNormalization::Pooled if antennas > 0 => scale * sum / antennas as f64,
        FusionNormalization::Pooled => 0.0,
    }
}

/// Detection probability of the 2-DoF noncentral chi-square model at false-alarm `pfa`.
pub fn analytic_pd_fusion(rho: f64, pfa: f64) -> Result<f64> {
    let xi = crate::stats::threshold_from_pfa(pfa)?;
    noncentral_chi2_sf_2dof(xi, rho)
}

/// Threshold on `2 ln Λ` giving false-alarm `pfa` for `receivers` stacked branches.
pub fn fusion_threshold(pfa: f64, receivers: usize) -> Result<f64> {
    threshold_even_dof(pfa, receivers)
}

/// Outcome of one detector run.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorReport {
    /// Wilks-scaled statistic `2 ln Λ`.
    pub statistic: f64,
    pub threshold: f64,
    pub decision: bool,
    /// Analytic noncentrality at the configured target variance.
    pub rho: f64,
    pub pd: f64,
}

/// Simulates one coherent interval and applies the fused detector.
#[allow(clippy::too_many_arguments)]
pub fn run_fusion_trial<R: Rng + ?Sized>(
    model: &StackedModel,
    precoders: &PrecoderSet,
    symbols: &CMatrix,
    alpha: Option<&[C64]>,
    sigma_rcs2: f64,
    sigma_ns2: f64,
    pfa: f64,
    rng: &mut R,
) -> Result<DetectorReport> {
    let x = transmit_block(precoders, symbols);
    let blocks = model.known_blocks(&x);
    let obs = simulate_observation(model, &x, alpha, sigma_ns2, rng)?;
    let statistic = 2.0 * glrt_statistic(&obs, &blocks, sigma_ns2)?;
    let threshold = fusion_threshold(pfa, model.receivers())?;
    let rho = noncentrality_fusion(
        model,
        &precoders.w_hat,
        symbols.ncols(),
        sigma_rcs2,
        sigma_ns2,
        FusionNormalization::PerReceiver,
        ReceiverSet::All,
    );
    Ok(DetectorReport {
        statistic,
        threshold,
        decision: statistic >= threshold,
        rho,
        pd: analytic_pd_fusion(rho, pfa)?,
    })
}

/// Stacks a per-receiver observation list into one `(N0 + R N1) × L` matrix.
pub fn stacked(obs: &Observations) -> CMatrix {
    let rows: usize = obs.z.iter().map(|z| z.nrows()).sum();
    let cols = obs.z.first().map_or(0, |z| z.ncols());
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for z in &obs.z {
        out.rows_mut(at, z.nrows()).copy_from(z);
        at += z.nrows();
    }
    out
}

/// Column `l` of the block-diagonal `A[l]`, useful for dense cross-checks.
pub fn dense_a(blocks: &[CMatrix], slot: usize) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut a = CMatrix::zeros(rows, blocks.len());
    let mut at = 0;
    for (r, b) in blocks.iter().enumerate() {
        let col: CVector = b.column(slot).into_owned();
        a.view_mut((at, r), (b.nrows(), 1)).copy_from(&col);
        at += b.nrows();
    }
    a
}
