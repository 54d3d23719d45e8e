//! One Monte Carlo draw: geometry, channels, precoders and the per-scheme metrics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detect_fusion::{
    analytic_pd_fusion, draw_symbols, fusion_threshold, glrt_statistic, noncentrality_fusion, simulate_observation,
    transmit_block, ReceiverSet, StackedModel,
};
use crate::detect_local::{interference_cov, local_glrt, matched_filter, noncentrality_local, simulate_local_observation};
use crate::error::Result;
use crate::linalg::{complex_normal, C64};
use crate::optimize::{
    algorithm1, build_qos_rows, objective_gains, solve_p2, solve_pa, AllocationResult, QosRow, SensingStream,
};
use crate::precoding::PrecoderSet;
use crate::rng::{substream, Purpose};
use crate::scenario::{draw_channels, generate_layout, ChannelSet, Layout, ScenarioConfig};
use crate::stats::{noncentral_chi2_sf_2dof, threshold_from_pfa};
use crate::vote::{fuse, optimal_kappa_or_limit, vote_outcome};

/// Backhaul capacity regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Raw observations reach the central controller.
    Unlimited,
    /// Only one-bit decisions reach the central controller.
    Limited,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Unlimited => "unlimited",
            Regime::Limited => "limited",
        }
    }
}

/// Sensing scheme compared in the figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Iaps,
    IapsWoS0,
    Active,
    ActiveWoS0,
    Passive,
    PassiveWoS0,
    MinPtotal,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Iaps,
        Scheme::IapsWoS0,
        Scheme::Active,
        Scheme::ActiveWoS0,
        Scheme::Passive,
        Scheme::PassiveWoS0,
        Scheme::MinPtotal,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Iaps => "iaps",
            Scheme::IapsWoS0 => "iaps-wo-s0",
            Scheme::Active => "active",
            Scheme::ActiveWoS0 => "active-wo-s0",
            Scheme::Passive => "passive",
            Scheme::PassiveWoS0 => "passive-wo-s0",
            Scheme::MinPtotal => "min-ptotal",
        }
    }

    pub fn receivers(self) -> ReceiverSet {
        match self {
            Scheme::Iaps | Scheme::IapsWoS0 | Scheme::MinPtotal => ReceiverSet::All,
            Scheme::Active | Scheme::ActiveWoS0 => ReceiverSet::Active,
            Scheme::Passive | Scheme::PassiveWoS0 => ReceiverSet::Passive,
        }
    }

    pub fn allocation(self) -> AllocationKind {
        match self {
            Scheme::Iaps | Scheme::Active | Scheme::Passive => AllocationKind::WithSensing,
            Scheme::IapsWoS0 | Scheme::ActiveWoS0 | Scheme::PassiveWoS0 => AllocationKind::WithoutSensing,
            Scheme::MinPtotal => AllocationKind::MinPower,
        }
    }
}

/// Power allocation a scheme draws on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AllocationKind {
    /// P2 (unlimited) or the `p0` descent heuristic (limited).
    WithSensing,
    /// P2 with the sensing stream switched off, in both regimes.
    WithoutSensing,
    /// Minimum total power with `p0 = 0`.
    MinPower,
}

/// Everything drawn for one trial of one configuration.
#[derive(Debug, Clone)]
pub struct TrialDraw {
    pub layout: Layout,
    pub channels: ChannelSet,
    pub precoders: PrecoderSet,
    pub model: StackedModel,
    pub rows: Vec<QosRow>,
    pub gains: Vec<f64>,
}

impl TrialDraw {
    pub fn new(config: &ScenarioConfig, seed: u64, trial: u64) -> Result<Self> {
        let layout = generate_layout(config, &mut substream(seed, trial, Purpose::Layout));
        let channels = draw_channels(&layout, config, &mut substream(seed, trial, Purpose::Channels))?;
        let precoders = PrecoderSet::from_channels(&channels, config)?;
        let model = StackedModel::from_channels(&channels);
        let rows = build_qos_rows(&channels.h, &precoders, config.gamma_db, config.sigma_nc2_mw())?;
        let gains = objective_gains(&model.b, &precoders);
        Ok(Self { layout, channels, precoders, model, rows, gains })
    }

    pub fn allocate(&self, config: &ScenarioConfig, kind: AllocationKind, regime: Regime) -> Result<AllocationResult> {
        let p_max = config.p_max_mw();
        match (kind, regime) {
            (AllocationKind::WithSensing, Regime::Unlimited) => {
                solve_p2(&self.rows, &self.gains, p_max, SensingStream::Included)
            }
            (AllocationKind::WithSensing, Regime::Limited) => {
                Ok(algorithm1(&self.rows, p_max, config.delta_p_frac)?.allocation)
            }
            (AllocationKind::WithoutSensing, _) => solve_p2(&self.rows, &self.gains, p_max, SensingStream::Excluded),
            (AllocationKind::MinPower, _) => solve_pa(&self.rows, 0.0),
        }
    }

    pub fn powered(&self, p: &[f64]) -> Result<PrecoderSet> {
        self.precoders.with_powers(p)
    }

    /// Fused-detector noncentrality for the given powers and receiver subset.
    pub fn fusion_rho(&self, config: &ScenarioConfig, p: &[f64], receivers: ReceiverSet) -> Result<f64> {
        let pre = self.powered(p)?;
        Ok(noncentrality_fusion(
            &self.model,
            &pre.w_hat,
            config.l,
            config.sigma_rcs2(),
            config.sigma_ns2(),
            config.fusion_normalization,
            receivers,
        ))
    }

    /// Per-node noncentralities `ρ_0..ρ_R` of the local detectors.
    pub fn local_rhos(&self, config: &ScenarioConfig, p: &[f64]) -> Result<Vec<f64>> {
        let pre = self.powered(p)?;
        let sigma2 = config.sigma_ns2();
        let mut out = Vec::with_capacity(self.model.receivers());
        for (r, b) in self.model.b.iter().enumerate() {
            let g = if r == 0 { None } else { Some(&self.channels.g[r - 1]) };
            let q = interference_cov(g, &pre.w_hat, sigma2, b.nrows());
            out.push(noncentrality_local(b, &pre.w_hat, &q, config.l, config.sigma_rcs2())?);
        }
        Ok(out)
    }

    /// Per-node detection probabilities of the local detectors.
    pub fn local_pds(&self, config: &ScenarioConfig, p: &[f64]) -> Result<Vec<f64>> {
        let zeta = threshold_from_pfa(config.pfa)?;
        self.local_rhos(config, p)?
            .into_iter()
            .map(|rho| noncentral_chi2_sf_2dof(zeta, rho))
            .collect()
    }

    /// Average per-node detection probability `P̂_D` over all `R+1` nodes.
    pub fn pd_hat(&self, config: &ScenarioConfig, p: &[f64]) -> Result<f64> {
        let pds = self.local_pds(config, p)?;
        Ok(pds.iter().sum::<f64>() / pds.len() as f64)
    }

    /// Detection probability of a scheme under a regime for fixed powers.
    pub fn detection_probability(&self, config: &ScenarioConfig, p: &[f64], scheme: Scheme, regime: Regime) -> Result<f64> {
        let receivers = scheme.receivers();
        match regime {
            Regime::Unlimited => analytic_pd_fusion(self.fusion_rho(config, p, receivers)?, config.pfa),
            Regime::Limited => {
                let pds: Vec<f64> = self
                    .local_pds(config, p)?
                    .into_iter()
                    .enumerate()
                    .filter(|(r, _)| receivers.contains(*r))
                    .map(|(_, v)| v)
                    .collect();
                if pds.is_empty() {
                    return Ok(0.0);
                }
                let pd_hat = pds.iter().sum::<f64>() / pds.len() as f64;
                Ok(vote_outcome(pd_hat, config.pfa, pds.len())?.pd)
            }
        }
    }

    /// `Σ_r ρ_r` of the local detectors.
    pub fn total_local_rho(&self, config: &ScenarioConfig, p: &[f64]) -> Result<f64> {
        Ok(self.local_rhos(config, p)?.iter().sum())
    }
}

/// Decisions of one simulated coherent interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDecision {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: bool,
}

/// Bit-level simulation of the fused detector: draws Swerling-I gains (or none
/// under the null hypothesis), symbols and noise, then thresholds `2 ln Λ` at the
/// exact `2(R+1)`-DoF null quantile.
pub fn simulate_fusion_decision<R: Rng + ?Sized>(
    draw: &TrialDraw,
    config: &ScenarioConfig,
    p: &[f64],
    target: bool,
    rng: &mut R,
) -> Result<SimulatedDecision> {
    let pre = draw.powered(p)?;
    let s = draw_symbols(pre.streams(), config.l, rng)?;
    let x = transmit_block(&pre, &s);
    let alpha: Option<Vec<C64>> = target.then(|| (0..draw.model.receivers()).map(|_| complex_normal(rng, config.sigma_rcs2())).collect());
    let obs = simulate_observation(&draw.model, &x, alpha.as_deref(), config.sigma_ns2(), rng)?;
    let statistic = 2.0 * glrt_statistic(&obs, &draw.model.known_blocks(&x), config.sigma_ns2())?;
    let threshold = fusion_threshold(config.pfa, draw.model.receivers())?;
    Ok(SimulatedDecision { statistic, threshold, decision: statistic >= threshold })
}

/// Bit-level simulation of the limited regime: every node matched-filters its own
/// slots (including the target-free path `G_r X`), whitens, thresholds, and the
/// central controller votes with the optimal threshold for the nodes' analytic `P̂_D`.
pub fn simulate_limited_decision<R: Rng + ?Sized>(
    draw: &TrialDraw,
    config: &ScenarioConfig,
    p: &[f64],
    target: bool,
    rng: &mut R,
) -> Result<(Vec<bool>, bool)> {
    let pre = draw.powered(p)?;
    let s = draw_symbols(pre.streams(), config.l, rng)?;
    let x = transmit_block(&pre, &s);
    let zeta = threshold_from_pfa(config.pfa)?;
    let sigma2 = config.sigma_ns2();
    let mut bits = Vec::with_capacity(draw.model.receivers());
    for (r, b) in draw.model.b.iter().enumerate() {
        let g = if r == 0 { None } else { Some(&draw.channels.g[r - 1]) };
        let alpha = target.then(|| complex_normal(rng, config.sigma_rcs2()));
        let z = simulate_local_observation(b, g, &x, alpha, sigma2, rng)?;
        let zt = matched_filter(&z, &s)?;
        let q = interference_cov(g, &pre.w_hat, sigma2, b.nrows());
        let q_inv = crate::linalg::hermitian_inverse(&q)?;
        bits.push(2.0 * local_glrt(&zt, &pre, b, &q_inv)? >= zeta);
    }
    let kappa = optimal_kappa_or_limit(draw.pd_hat(config, p)?, config.pfa, bits.len())?;
    let decision = fuse(&bits, kappa);
    Ok((bits, decision))
}
