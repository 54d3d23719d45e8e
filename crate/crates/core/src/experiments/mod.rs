//! Monte Carlo sweeps behind the figures.
//!
//! Trials run in parallel but every random draw is addressed by
//! `(seed, trial, purpose)` and results are reduced in trial order, so a table
//! depends only on its spec.

pub mod output;
pub mod plot;
pub mod trial;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{algorithm1, grid_upper_bound, solve_pa, stepsize_tradeoff};
use crate::scenario::ScenarioConfig;
pub use trial::{AllocationKind, Regime, Scheme, SimulatedDecision, TrialDraw};

/// Swept quantity of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    SigmaRcsDb,
    PMaxDbm,
    R,
    K,
    GammaDb,
    /// Sensing power as a fraction of the budget.
    P0Frac,
    /// Algorithm step as a fraction of the budget.
    StepFrac,
    /// Share of the budget given to the sensing stream.
    SensingShare,
}

impl SweepVariable {
    pub fn axis_label(self) -> &'static str {
        match self {
            SweepVariable::SigmaRcsDb => "sigma_rcs^2 (dB)",
            SweepVariable::PMaxDbm => "P_max (dBm)",
            SweepVariable::R => "number of RAPs R",
            SweepVariable::K => "number of UEs K",
            SweepVariable::GammaDb => "SINR threshold (dB)",
            SweepVariable::P0Frac => "p_0 / P_max",
            SweepVariable::StepFrac => "step / P_max",
            SweepVariable::SensingShare => "sensing power share",
        }
    }

    /// Applies a sweep value to a configuration.
    pub fn apply(self, config: &ScenarioConfig, x: f64) -> Result<ScenarioConfig> {
        let mut c = config.clone();
        let count = |x: f64| -> Result<usize> {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::Config(format!("sweep value {x} is not a count")))
            }
        };
        match self {
            SweepVariable::SigmaRcsDb => c.sigma_rcs_db = x,
            SweepVariable::PMaxDbm => c.p_max_dbm = x,
            SweepVariable::R => c.r = count(x)?,
            SweepVariable::K => c.k = count(x)?,
            SweepVariable::GammaDb => c.gamma_db = x,
            SweepVariable::StepFrac => c.delta_p_frac = x,
            SweepVariable::P0Frac | SweepVariable::SensingShare => {}
        }
        c.validate()?;
        Ok(c)
    }
}

/// One curve family: a sweep evaluated for several schemes and regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub figure: String,
    pub sweep: SweepVariable,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub regimes: Vec<Regime>,
    pub trials: usize,
    pub seed: u64,
    /// Suffix appended to scheme labels, for figures with several series per scheme.
    #[serde(default)]
    pub series: Option<String>,
    #[serde(default)]
    pub config: ScenarioConfig,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(Error::Config("sweep has no values".into()));
        }
        let increasing = self.values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::Config("sweep values must be strictly monotone".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        self.config.validate()
    }

    fn label(&self, scheme: &str) -> String {
        match &self.series {
            Some(s) => format!("{scheme}@{s}"),
            None => scheme.to_string(),
        }
    }
}

/// One row of a figure table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub figure: String,
    pub scheme: String,
    pub regime: String,
    pub x: f64,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub infeasible_count: usize,
}

/// Running mean and standard error over the trials of one point.
#[derive(Debug, Clone, Default)]
struct Accumulator {
    values: Vec<f64>,
}

impl Accumulator {
    fn push(&mut self, v: f64) {
        self.values.push(v);
    }

    fn summary(&self) -> (f64, f64) {
        let n = self.values.len();
        if n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let mean = self.values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return (mean, 0.0);
        }
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, (var / n as f64).sqrt())
    }
}

/// Per-trial outcome of a sweep point: `None` when an allocation was infeasible.
type TrialValues = Option<Vec<f64>>;

fn parallel_trials<F>(trials: usize, f: F) -> Result<Vec<TrialValues>>
where
    F: Fn(u64) -> Result<TrialValues> + Sync + Send,
{
    (0..trials as u64).into_par_iter().map(&f).collect()
}

#[allow(clippy::too_many_arguments)]
fn reduce_points(
    figure: &str,
    labels: &[(String, Regime)],
    x: f64,
    outcomes: &[TrialValues],
    out: &mut Vec<CurvePoint>,
) {
    let mut acc = vec![Accumulator::default(); labels.len()];
    let mut infeasible = 0;
    for o in outcomes {
        match o {
            Some(values) => values.iter().zip(acc.iter_mut()).for_each(|(v, a)| a.push(*v)),
            None => infeasible += 1,
        }
    }
    for ((label, regime), a) in labels.iter().zip(&acc) {
        let (mean, stderr) = a.summary();
        out.push(CurvePoint {
            figure: figure.to_string(),
            scheme: label.clone(),
            regime: regime.label().to_string(),
            x,
            mean,
            stderr,
            trials: a.values.len(),
            infeasible_count: infeasible,
        });
    }
}

/// Averages analytic detection probabilities over the trials of every sweep point.
///
/// A trial whose required allocations are not all optimal is excluded for every
/// scheme of that point and counted in `infeasible_count`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<CurvePoint>> {
    spec.validate()?;
    let labels: Vec<(String, Regime)> = spec
        .regimes
        .iter()
        .flat_map(|&r| spec.schemes.iter().map(move |&s| (spec.label(s.label()), r)))
        .collect();
    let mut out = Vec::new();
    for &x in &spec.values {
        let config = spec.sweep.apply(&spec.config, x)?;
        let outcomes = parallel_trials(spec.trials, |t| {
            let draw = TrialDraw::new(&config, spec.seed, t)?;
            let mut values = Vec::with_capacity(labels.len());
            for &regime in &spec.regimes {
                let mut cache: Vec<(AllocationKind, Vec<f64>)> = Vec::new();
                for &scheme in &spec.schemes {
                    let kind = scheme.allocation();
                    let p = match cache.iter().find(|(k, _)| *k == kind) {
                        Some((_, p)) => p.clone(),
                        None => {
                            let a = draw.allocate(&config, kind, regime)?;
                            if !a.is_optimal() {
                                return Ok(None);
                            }
                            cache.push((kind, a.p.clone()));
                            a.p
                        }
                    };
                    values.push(draw.detection_probability(&config, &p, scheme, regime)?);
                }
            }
            Ok(Some(values))
        })?;
        reduce_points(&spec.figure, &labels, x, &outcomes, &mut out);
    }
    Ok(out)
}

/// Average `P̂_D` as `p_0` rises in steps of `delta_p_frac · P_max`, with the
/// UE powers from the minimum-power problem. Points whose total exceeds the
/// budget are counted as infeasible.
pub fn run_pd_vs_p0(config: &ScenarioConfig, trials: usize, seed: u64) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    let steps = (1.0 / config.delta_p_frac).round() as usize;
    let fracs: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let p_max = config.p_max_mw();
    let per_trial: Vec<Vec<Option<f64>>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let draw = TrialDraw::new(config, seed, t)?;
            fracs
                .iter()
                .map(|&f| {
                    let a = solve_pa(&draw.rows, f * p_max)?;
                    if !a.is_optimal() || a.total_power() > p_max * (1.0 + 1e-12) {
                        return Ok(None);
                    }
                    Ok(Some(draw.pd_hat(config, &a.p)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let labels = [("iaps".to_string(), Regime::Limited)];
    let mut out = Vec::new();
    for (i, &f) in fracs.iter().enumerate() {
        let outcomes: Vec<TrialValues> = per_trial.iter().map(|v| v[i].map(|x| vec![x])).collect();
        reduce_points("fig2", &labels, f, &outcomes, &mut out);
    }
    Ok(out)
}

/// `P̂_D` of the descent heuristic against the grid-search bound across a
/// `σ_rcs²` sweep.
pub fn run_gap(config: &ScenarioConfig, values: &[f64], grid_points: usize, trials: usize, seed: u64) -> Result<Vec<CurvePoint>> {
    let labels = [
        ("algorithm1".to_string(), Regime::Limited),
        ("upper-bound".to_string(), Regime::Limited),
    ];
    let mut out = Vec::new();
    for &x in values {
        let c = SweepVariable::SigmaRcsDb.apply(config, x)?;
        let outcomes = parallel_trials(trials, |t| {
            let draw = TrialDraw::new(&c, seed, t)?;
            let heuristic = algorithm1(&draw.rows, c.p_max_mw(), c.delta_p_frac)?;
            if !heuristic.allocation.is_optimal() {
                return Ok(None);
            }
            let bound = grid_upper_bound(&draw.rows, c.p_max_mw(), grid_points, |p| draw.pd_hat(&c, p))?;
            let Some(bound) = bound else { return Ok(None) };
            Ok(Some(vec![draw.pd_hat(&c, &heuristic.allocation.p)?, bound.value]))
        })?;
        reduce_points("fig3", &labels, x, &outcomes, &mut out);
    }
    Ok(out)
}

/// Runtime, iteration count and total noncentrality of the heuristic per step size.
/// Runtimes are wall-clock measurements and vary between runs.
pub fn run_step_tradeoff(config: &ScenarioConfig, steps: &[f64], trials: usize, seed: u64) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    let per_trial: Vec<Option<Vec<crate::optimize::StepTradeoff>>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let draw = TrialDraw::new(config, seed, t)?;
            let rows = stepsize_tradeoff(&draw.rows, config.p_max_mw(), steps, |p| draw.total_local_rho(config, p))?;
            Ok(rows.iter().all(|r| r.total_rho_db.is_finite()).then_some(rows))
        })
        .collect::<Result<_>>()?;
    let labels = [
        ("runtime_ms".to_string(), Regime::Limited),
        ("total_rho_db".to_string(), Regime::Limited),
        ("iterations".to_string(), Regime::Limited),
    ];
    let mut out = Vec::new();
    for (i, &s) in steps.iter().enumerate() {
        let outcomes: Vec<TrialValues> = per_trial
            .iter()
            .map(|o| o.as_ref().map(|rows| vec![rows[i].runtime_ms, rows[i].total_rho_db, rows[i].iterations as f64]))
            .collect();
        reduce_points("fig4", &labels, s, &outcomes, &mut out);
    }
    Ok(out)
}

/// Largest SINR threshold every UE can reach when `share · P_max` goes to sensing.
pub fn max_common_sinr(draw: &TrialDraw, config: &ScenarioConfig, share: f64) -> Result<(f64, Vec<f64>)> {
    let p_max = config.p_max_mw();
    let p0 = share * p_max;
    let budget = p_max - p0;
    let at = |gamma: f64| -> Result<Option<Vec<f64>>> {
        let rows: Vec<_> = draw.rows.iter().map(|r| crate::optimize::QosRow { gamma, ..r.clone() }).collect();
        let a = solve_pa(&rows, p0)?;
        Ok((a.is_optimal() && a.objective <= budget * (1.0 + 1e-12)).then_some(a.p))
    };
    let zero = {
        let mut p = vec![0.0; draw.precoders.streams()];
        p[0] = p0;
        p
    };
    if budget <= 0.0 {
        return Ok((0.0, zero));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = at(1e-300)?.unwrap_or(zero);
    while let Some(p) = at(hi)? {
        lo = hi;
        best = p;
        hi *= 4.0;
        if hi > 1e15 {
            return Ok((lo, best));
        }
    }
    for _ in 0..60 {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        match at(mid)? {
            Some(p) => {
                lo = mid;
                best = p;
            }
            None => hi = mid,
        }
    }
    Ok((lo, best))
}

/// Communication-sensing tradeoff across the sensing share of the budget.
pub fn run_tradeoff(config: &ScenarioConfig, shares: &[f64], trials: usize, seed: u64) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    let labels = [
        ("max-gamma".to_string(), Regime::Unlimited),
        ("rho".to_string(), Regime::Unlimited),
    ];
    let mut out = Vec::new();
    for &s in shares {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Config(format!("sensing share {s} outside [0,1]")));
        }
        let outcomes = parallel_trials(trials, |t| {
            let draw = TrialDraw::new(config, seed, t)?;
            let (gamma, p) = max_common_sinr(&draw, config, s)?;
            let rho = draw.fusion_rho(config, &p, crate::detect_fusion::ReceiverSet::All)?;
            Ok(Some(vec![gamma, rho]))
        })?;
        reduce_points("tradeoff", &labels, s, &outcomes, &mut out);
    }
    Ok(out)
}

/// Identifiers of the reproducible figures.
pub const FIGURES: [&str; 11] = [
    "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "tradeoff",
];

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// Sweep specs of the curve figures; `None` for figures with a dedicated runner.
pub fn figure_specs(figure: &str, config: &ScenarioConfig, trials: usize, seed: u64) -> Result<Option<Vec<ExperimentSpec>>> {
    let spec = |sweep, values: Vec<f64>, schemes: Vec<Scheme>, regimes: Vec<Regime>, config: ScenarioConfig| ExperimentSpec {
        figure: figure.to_string(),
        sweep,
        values,
        schemes,
        regimes,
        trials,
        seed,
        series: None,
        config,
    };
    let rcs = range(-22.0, -16.0, 1.0);
    let at_19 = ScenarioConfig { sigma_rcs_db: -19.0, ..config.clone() };
    let specs = match figure {
        "fig6" => vec![spec(SweepVariable::SigmaRcsDb, rcs, Scheme::ALL.to_vec(), vec![Regime::Unlimited], config.clone())],
        "fig7" => vec![spec(SweepVariable::PMaxDbm, range(20.0, 36.0, 2.0), Scheme::ALL.to_vec(), vec![Regime::Unlimited], at_19)],
        "fig8" => vec![spec(
            SweepVariable::R,
            range(2.0, 16.0, 2.0),
            vec![Scheme::Iaps, Scheme::IapsWoS0, Scheme::Active, Scheme::Passive, Scheme::PassiveWoS0],
            vec![Regime::Unlimited],
            at_19,
        )],
        "fig9" => vec![spec(
            SweepVariable::K,
            range(2.0, 14.0, 2.0),
            vec![Scheme::Iaps, Scheme::IapsWoS0, Scheme::Active, Scheme::Passive, Scheme::PassiveWoS0],
            vec![Regime::Unlimited],
            ScenarioConfig { p_max_dbm: 33.0, ..at_19 },
        )],
        "fig10" => vec![spec(
            SweepVariable::SigmaRcsDb,
            rcs,
            vec![Scheme::Iaps, Scheme::Active, Scheme::Passive],
            vec![Regime::Unlimited, Regime::Limited],
            config.clone(),
        )],
        "fig11" => [-20.0, -19.0, -18.0]
            .iter()
            .map(|&db| ExperimentSpec {
                series: Some(format!("{db}dB")),
                ..spec(
                    SweepVariable::R,
                    range(2.0, 16.0, 2.0),
                    vec![Scheme::Iaps],
                    vec![Regime::Limited],
                    ScenarioConfig { sigma_rcs_db: db, ..config.clone() },
                )
            })
            .collect(),
        f if FIGURES.contains(&f) => return Ok(None),
        other => return Err(Error::Config(format!("unknown figure {other:?}; expected one of {}", FIGURES.join(", ")))),
    };
    Ok(Some(specs))
}

/// Default step sizes of the step tradeoff figure.
pub const STEP_FRACTIONS: [f64; 8] = [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2];

/// Runs any curve figure by id.
pub fn run_figure(figure: &str, config: &ScenarioConfig, trials: usize, seed: u64) -> Result<Vec<CurvePoint>> {
    if let Some(specs) = figure_specs(figure, config, trials, seed)? {
        let mut out = Vec::new();
        for s in &specs {
            out.extend(run_experiment(s)?);
        }
        return Ok(out);
    }
    match figure {
        "fig2" => run_pd_vs_p0(config, trials, seed),
        "fig3" => run_gap(config, &range(-22.0, -16.0, 1.0), 201, trials, seed),
        "fig4" => run_step_tradeoff(config, &STEP_FRACTIONS, trials, seed),
        "tradeoff" => run_tradeoff(config, &range(0.0, 1.0, 0.1), trials, seed),
        _ => Err(Error::Config(format!("figure {figure:?} is not a curve figure"))),
    }
}

/// Fraction of trials dropped as infeasible, averaged over the rows of a table.
pub fn infeasible_fraction(points: &[CurvePoint]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points
        .iter()
        .map(|p| {
            let total = p.trials + p.infeasible_count;
            if total == 0 {
                0.0
            } else {
                p.infeasible_count as f64 / total as f64
            }
        })
        .sum::<f64>()
        / points.len() as f64
}

/// Run-level infeasibility used for the exit status. For `fig2` only the
/// `p_0 = 0` row counts, since larger `p_0` values exceed the budget by design.
pub fn run_infeasible_fraction(figure: &str, points: &[CurvePoint]) -> f64 {
    if figure == "fig2" {
        let first: Vec<CurvePoint> = points.iter().filter(|p| p.x == 0.0).cloned().collect();
        return infeasible_fraction(&first);
    }
    infeasible_fraction(points)
}
