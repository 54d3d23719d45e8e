//! Deployment geometry, random channels and the scenario configuration.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{complex_normal, complex_normal_matrix, CMatrix, CVector, C64};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

/// Sensing precoder construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ZfrMode {
    /// Orthogonal projection of `a(θ)` onto the null space of `Hᴴ`.
    #[default]
    Projection,
    /// `(I - H Hᴴ)⁻¹ a(θ)` as printed, with a Tikhonov fallback.
    Literal,
}

/// Noise normalization of the signal-fusion noncentrality parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FusionNormalization {
    /// Each receiver's echo energy is divided by the per-antenna noise power.
    /// This is the noncentrality of the stacked GLRT statistic.
    #[default]
    PerReceiver,
    /// Total echo energy divided by the pooled noise energy `(N0 + R N1) σ²`.
    Pooled,
}

/// All physical and system constants of one deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Transmit antennas at the BS.
    #[serde(rename = "M")]
    pub m: usize,
    /// Receive antennas at the BS.
    #[serde(rename = "N0")]
    pub n0: usize,
    /// Receive antennas per RAP.
    #[serde(rename = "N1")]
    pub n1: usize,
    /// Number of UEs.
    #[serde(rename = "K")]
    pub k: usize,
    /// Number of RAPs.
    #[serde(rename = "R")]
    pub r: usize,
    /// Symbol slots per coherent interval.
    #[serde(rename = "L")]
    pub l: usize,
    pub region_m: f64,
    /// Antenna spacing in wavelengths.
    pub delta: f64,
    pub p_max_dbm: f64,
    pub gamma_db: f64,
    pub pfa: f64,
    pub sigma_rcs_db: f64,
    pub sigma_nc_dbm: f64,
    pub sigma_ns_db: f64,
    pub delta_p_frac: f64,
    pub trials: usize,
    pub seed: u64,
    /// RZF regularization; `None` selects `K σ_nc² / P_max`.
    pub rzf_lambda: Option<f64>,
    pub zfr_mode: ZfrMode,
    pub fusion_normalization: FusionNormalization,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m: 16,
            n0: 20,
            n1: 20,
            k: 8,
            r: 10,
            l: 30,
            region_m: 500.0,
            delta: 0.5,
            p_max_dbm: 30.0,
            gamma_db: 15.0,
            pfa: 1e-5,
            sigma_rcs_db: -19.0,
            sigma_nc_dbm: -94.0,
            sigma_ns_db: DEFAULT_SIGMA_NS_DB,
            delta_p_frac: 0.01,
            trials: 200,
            seed: 2024,
            rzf_lambda: None,
            zfr_mode: ZfrMode::Projection,
            fusion_normalization: FusionNormalization::PerReceiver,
        }
    }
}

/// Sensing noise level (dB, sensing normalization) that places the
/// `σ_rcs² ∈ [-22, -16] dB` sweep across the detection transition.
pub const DEFAULT_SIGMA_NS_DB: f64 = 36.0;

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.k == 0 || self.n0 == 0 || self.n1 == 0 || self.l == 0 {
            return fail("antenna, user and slot counts must be positive".into());
        }
        if self.k > self.m {
            return fail(format!("K ({}) must not exceed M ({})", self.k, self.m));
        }
        if self.m >= self.n0 {
            return fail(format!("M ({}) must be smaller than N0 ({})", self.m, self.n0));
        }
        if self.l < self.k + 1 {
            return fail(format!("L ({}) must be at least K + 1 ({})", self.l, self.k + 1));
        }
        let finite = [
            self.region_m,
            self.delta,
            self.p_max_dbm,
            self.gamma_db,
            self.sigma_rcs_db,
            self.sigma_nc_dbm,
            self.sigma_ns_db,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("power, variance and geometry fields must be finite".into());
        }
        if self.region_m <= 0.0 || self.delta <= 0.0 {
            return fail("region size and antenna spacing must be positive".into());
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return fail(format!("pfa must lie in (0,1), got {}", self.pfa));
        }
        if !(self.delta_p_frac > 0.0 && self.delta_p_frac < 1.0) {
            return fail(format!("delta_p_frac must lie in (0,1), got {}", self.delta_p_frac));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if let Some(l) = self.rzf_lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return fail(format!("rzf_lambda must be finite and nonnegative, got {l}"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn p_max_mw(&self) -> f64 {
        dbm_to_mw(self.p_max_dbm)
    }

    pub fn gamma_linear(&self) -> f64 {
        db_to_linear(self.gamma_db)
    }

    pub fn sigma_rcs2(&self) -> f64 {
        db_to_linear(self.sigma_rcs_db)
    }

    pub fn sigma_nc2_mw(&self) -> f64 {
        dbm_to_mw(self.sigma_nc_dbm)
    }

    pub fn sigma_ns2(&self) -> f64 {
        db_to_linear(self.sigma_ns_db)
    }

    pub fn rzf_lambda(&self) -> f64 {
        self.rzf_lambda
            .unwrap_or_else(|| self.k as f64 * self.sigma_nc2_mw() / self.p_max_mw())
    }

    /// Total receive dimension of the stacked BS + RAP observation.
    pub fn stacked_dim(&self) -> usize {
        self.n0 + self.r * self.n1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Azimuth of `target` seen from `self`, for an array laid along the x-axis.
    pub fn azimuth_to(&self, target: &Point) -> f64 {
        (target.y - self.y).atan2(target.x - self.x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub bs_pos: Point,
    pub target_pos: Point,
    pub rap_pos: Vec<Point>,
    pub ue_pos: Vec<Point>,
    /// Target azimuth at the BS (rad).
    pub theta: f64,
    /// Target azimuth at each RAP (rad).
    pub phi: Vec<f64>,
    pub d_bs_ue_km: Vec<f64>,
    pub d_bs_rap_km: Vec<f64>,
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R, side: f64) -> Point {
    Point {
        x: rng.random::<f64>() * side,
        y: rng.random::<f64>() * side,
    }
}

/// Places the BS, UEs and RAPs uniformly in the square region with the target at its center.
///
/// Draw order is BS, UEs, RAPs, so the BS/UE geometry of a given stream does
/// not depend on the number of RAPs.
pub fn generate_layout<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Layout {
    let side = config.region_m;
    let target_pos = Point { x: 0.5 * side, y: 0.5 * side };
    let bs_pos = uniform_point(rng, side);
    let ue_pos: Vec<Point> = (0..config.k).map(|_| uniform_point(rng, side)).collect();
    let rap_pos: Vec<Point> = (0..config.r).map(|_| uniform_point(rng, side)).collect();
    Layout {
        theta: bs_pos.azimuth_to(&target_pos),
        phi: rap_pos.iter().map(|p| p.azimuth_to(&target_pos)).collect(),
        d_bs_ue_km: ue_pos.iter().map(|p| bs_pos.distance(p) / 1000.0).collect(),
        d_bs_rap_km: rap_pos.iter().map(|p| bs_pos.distance(p) / 1000.0).collect(),
        bs_pos,
        target_pos,
        rap_pos,
        ue_pos,
    }
}

/// Uniform linear array response: entry `m` is `exp(j 2π m δ sin(angle))`.
pub fn steering(angle: f64, n: usize, delta: f64) -> CVector {
    let phase = 2.0 * PI * delta * angle.sin();
    CVector::from_iterator(n, (0..n).map(|m| C64::from_polar(1.0, phase * m as f64)))
}

/// Large-scale path loss `128.1 + 37.6 log10(d)` in dB, with `d` in kilometers.
pub fn path_loss_db(d_km: f64) -> Result<f64> {
    if !(d_km > 0.0) || !d_km.is_finite() {
        return domain(format!("distance must be positive and finite, got {d_km} km"));
    }
    Ok(128.1 + 37.6 * d_km.log10())
}

pub fn path_gain(d_km: f64) -> Result<f64> {
    Ok(db_to_linear(-path_loss_db(d_km)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `M × K`, column `k` is the channel of UE `k + 1`.
    pub h: CMatrix,
    /// Target-free BS→RAP channels, each `N1 × M`.
    pub g: Vec<CMatrix>,
    pub a_theta: CVector,
    pub b0_theta: CVector,
    pub b1_phi: Vec<CVector>,
}

/// Rayleigh channels scaled by path loss, plus the steering vectors of the layout.
pub fn draw_channels<R: Rng + ?Sized>(
    layout: &Layout,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<ChannelSet> {
    if layout.ue_pos.len() != config.k || layout.rap_pos.len() != config.r {
        return Err(Error::Dimension(format!(
            "layout has {} UEs / {} RAPs, config expects {} / {}",
            layout.ue_pos.len(),
            layout.rap_pos.len(),
            config.k,
            config.r
        )));
    }
    let mut h = complex_normal_matrix(rng, config.m, config.k, 1.0);
    for (k, &d) in layout.d_bs_ue_km.iter().enumerate() {
        let s = path_gain(d)?.sqrt();
        h.column_mut(k).iter_mut().for_each(|z| *z *= s);
    }
    let mut g = Vec::with_capacity(config.r);
    for &d in &layout.d_bs_rap_km {
        let s = path_gain(d)?.sqrt();
        g.push(complex_normal_matrix(rng, config.n1, config.m, 1.0).map(|z| z * s));
    }
    Ok(ChannelSet {
        h,
        g,
        a_theta: steering(layout.theta, config.m, config.delta),
        b0_theta: steering(layout.theta, config.n0, config.delta),
        b1_phi: layout
            .phi
            .iter()
            .map(|&p| steering(p, config.n1, config.delta))
            .collect(),
    })
}

/// Swerling-I combined sensing gains `α_0..α_R`, i.i.d. `CN(0, σ_rcs²)`.
pub fn draw_rcs<R: Rng + ?Sized>(sigma_rcs2: f64, receivers: usize, rng: &mut R) -> Vec<C64> {
    (0..receivers).map(|_| complex_normal(rng, sigma_rcs2)).collect()
}

pub fn write_layout_csv(layout: &Layout, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node", "index", "x_m", "y_m", "azimuth_rad"])?;
    let f = |v: f64| format!("{v:.6}");
    w.write_record(["bs", "0", &f(layout.bs_pos.x), &f(layout.bs_pos.y), &f(layout.theta)])?;
    w.write_record(["target", "0", &f(layout.target_pos.x), &f(layout.target_pos.y), ""])?;
    for (i, (p, phi)) in layout.rap_pos.iter().zip(&layout.phi).enumerate() {
        w.write_record(["rap", &(i + 1).to_string(), &f(p.x), &f(p.y), &f(*phi)])?;
    }
    for (i, p) in layout.ue_pos.iter().enumerate() {
        w.write_record(["ue", &(i + 1).to_string(), &f(p.x), &f(p.y), ""])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per matrix element: `matrix,row,col,re,im`.
pub fn write_matrices_csv<'a, W: Write>(
    out: W,
    matrices: impl IntoIterator<Item = (String, &'a CMatrix)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["matrix", "row", "col", "re", "im"])?;
    for (name, m) in matrices {
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let z = m[(r, c)];
                w.write_record([
                    name.as_str(),
                    &r.to_string(),
                    &c.to_string(),
                    &format!("{:e}", z.re),
                    &format!("{:e}", z.im),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_channels_csv(channels: &ChannelSet, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let col = |v: &CVector| CMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let a = col(&channels.a_theta);
    let b0 = col(&channels.b0_theta);
    let b1: Vec<CMatrix> = channels.b1_phi.iter().map(col).collect();
    let mut items: Vec<(String, &CMatrix)> = vec![("H".into(), &channels.h), ("a_theta".into(), &a), ("b0_theta".into(), &b0)];
    for (r, g) in channels.g.iter().enumerate() {
        items.push((format!("G{}", r + 1), g));
    }
    for (r, b) in b1.iter().enumerate() {
        items.push((format!("b1_phi{}", r + 1), b));
    }
    write_matrices_csv(file, items)
}
