//! RZF communication precoders, the ZFR sensing precoder and per-UE SINR.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{fix_phase, normalized, CMatrix, CVector, C64, CONDITION_LIMIT};
use crate::scenario::{ChannelSet, ScenarioConfig, ZfrMode};

/// Relative singular-value cutoff used to decide the rank of `H`.
const RANK_TOL: f64 = 1e-10;

/// Unit-norm directions of the `K` communication streams.
///
/// Uses the push-through form `H (Hᴴ H + λ I)⁻¹`, which equals
/// `(H Hᴴ + λ I)⁻¹ H` and stays defined at `λ = 0` for full column rank `H`.
pub fn rzf(h: &CMatrix, lambda: f64) -> Result<Vec<CVector>> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("RZF regularization must be nonnegative, got {lambda}")));
    }
    let k = h.ncols();
    let gram = h.adjoint() * h + CMatrix::identity(k, k) * C64::new(lambda, 0.0);
    let lu = gram.clone().lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| Error::Numeric("RZF system is singular".into()))?;
    let cond = gram.norm() * inv.norm();
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::Numeric(format!("RZF system is ill-conditioned ({cond:.3e})")));
    }
    let dirs = h * inv;
    (0..k)
        .map(|j| {
            let mut v = normalized(&dirs.column(j).into_owned())
                .ok_or_else(|| Error::Numeric(format!("RZF direction {} vanished", j + 1)))?;
            fix_phase(&mut v);
            Ok(v)
        })
        .collect()
}

/// Orthonormal basis of the column span of `h`.
fn column_basis(h: &CMatrix) -> CMatrix {
    let m = h.nrows();
    if h.ncols() == 0 {
        return CMatrix::zeros(m, 0);
    }
    let svd = h.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > RANK_TOL * smax)
        .collect();
    CMatrix::from_fn(m, keep.len(), |r, c| u[(r, keep[c])])
}

/// Sensing direction that keeps the sensing stream out of every UE's channel.
pub fn zfr(h: &CMatrix, a_theta: &CVector, mode: ZfrMode) -> Result<CVector> {
    if h.nrows() != a_theta.len() {
        return Err(Error::Dimension(format!(
            "H has {} rows but a(θ) has {} entries",
            h.nrows(),
            a_theta.len()
        )));
    }
    if h.ncols() >= h.nrows() {
        return Err(Error::Domain(format!(
            "ZFR needs K < M, got K = {} and M = {}",
            h.ncols(),
            h.nrows()
        )));
    }
    let raw = match mode {
        ZfrMode::Projection => {
            let q = column_basis(h);
            a_theta - &q * (q.adjoint() * a_theta)
        }
        ZfrMode::Literal => literal_zfr(h, a_theta),
    };
    if raw.norm() <= 1e-10 * a_theta.norm() {
        return Err(Error::Degenerate("a(θ) lies in the span of the UE channels".into()));
    }
    let mut v = normalized(&raw).ok_or_else(|| Error::Degenerate("zero sensing direction".into()))?;
    fix_phase(&mut v);
    Ok(v)
}

fn literal_zfr(h: &CMatrix, a_theta: &CVector) -> CVector {
    let m = h.nrows();
    let eye = CMatrix::identity(m, m);
    let t = &eye - h * h.adjoint();
    let sv = t.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smin > 0.0 && smax / smin <= CONDITION_LIMIT {
        if let Some(x) = t.clone().lu().solve(a_theta) {
            return x;
        }
    }
    let eps = 1e-8 * smax.max(1.0);
    let reg = t.adjoint() * &t + eye * C64::new(eps, 0.0);
    let rhs = t.adjoint() * a_theta;
    reg.lu().solve(&rhs).unwrap_or(rhs)
}

/// Normalized precoders, stream powers and the derived covariance `Ŵ = W Wᴴ`.
///
/// Column 0 is the sensing stream, columns `1..=K` serve the UEs.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub w_tilde: Vec<CVector>,
    pub p: Vec<f64>,
    pub w: CMatrix,
    pub w_hat: CMatrix,
}

impl PrecoderSet {
    pub fn new(w_tilde: Vec<CVector>, p: Vec<f64>) -> Result<Self> {
        if w_tilde.is_empty() || w_tilde.len() != p.len() {
            return Err(Error::Dimension(format!(
                "{} precoders but {} powers",
                w_tilde.len(),
                p.len()
            )));
        }
        let m = w_tilde[0].len();
        if w_tilde.iter().any(|v| v.len() != m) {
            return Err(Error::Dimension("precoders of unequal length".into()));
        }
        if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::Domain("stream powers must be finite and nonnegative".into()));
        }
        let w = CMatrix::from_fn(m, p.len(), |r, c| w_tilde[c][r] * p[c].sqrt());
        let w_hat = &w * w.adjoint();
        Ok(Self { w_tilde, p, w, w_hat })
    }

    /// RZF and ZFR directions for a channel draw, all powers zero.
    pub fn from_channels(channels: &ChannelSet, config: &ScenarioConfig) -> Result<Self> {
        let mut dirs = Vec::with_capacity(config.k + 1);
        dirs.push(zfr(&channels.h, &channels.a_theta, config.zfr_mode)?);
        dirs.extend(rzf(&channels.h, config.rzf_lambda())?);
        let n = dirs.len();
        Self::new(dirs, vec![0.0; n])
    }

    pub fn with_powers(&self, p: &[f64]) -> Result<Self> {
        Self::new(self.w_tilde.clone(), p.to_vec())
    }

    /// Stream count including the sensing stream.
    pub fn streams(&self) -> usize {
        self.p.len()
    }

    pub fn antennas(&self) -> usize {
        self.w.nrows()
    }

    /// `M × (K+1)` matrix of unit directions.
    pub fn directions(&self) -> CMatrix {
        CMatrix::from_fn(self.antennas(), self.streams(), |r, c| self.w_tilde[c][r])
    }

    pub fn total_power(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Writes `stream,antenna,re,im,power` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["stream", "antenna", "re", "im", "power_mw"])?;
        for (k, v) in self.w_tilde.iter().enumerate() {
            for (m, z) in v.iter().enumerate() {
                w.write_record([
                    k.to_string(),
                    m.to_string(),
                    format!("{:e}", z.re),
                    format!("{:e}", z.im),
                    format!("{:e}", self.p[k]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// SINR of UE `k` (1-based) with the sensing stream counted as interference.
pub fn sinr(h: &CMatrix, precoders: &PrecoderSet, k: usize, sigma_nc2: f64) -> Result<f64> {
    let users = h.ncols();
    if k == 0 || k > users || precoders.streams() != users + 1 {
        return Err(Error::Dimension(format!(
            "UE index {k} invalid for K = {users} and {} streams",
            precoders.streams()
        )));
    }
    let hk = h.column(k - 1);
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (j, (w, &p)) in precoders.w_tilde.iter().zip(&precoders.p).enumerate() {
        let g = p * hk.dotc(w).norm_sqr();
        if j == k {
            signal = g;
        } else {
            interference += g;
        }
    }
    Ok(signal / (interference + sigma_nc2))
}

/// Per-stream beam gains `|a(θ)ᴴ w̃_k|²`.
pub fn beam_gain(precoders: &PrecoderSet, a_theta: &CVector) -> Vec<f64> {
    precoders
        .w_tilde
        .iter()
        .map(|w| a_theta.dotc(w).norm_sqr())
        .collect()
}
