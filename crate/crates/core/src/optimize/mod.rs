//! SINR-constrained power allocation.
//!
//! Each UE's QoS requirement `γ_k ≥ Γ` is a second-order cone in `√p`; squaring
//! both nonnegative sides turns it into the linear row
//! `Σ_{j≠k} ϱ_kj² p_j + σ² ≤ p_k ϱ_kk² / Γ`, so every allocation problem here is
//! a small linear program.

pub mod lp;

use std::io::{BufRead, Write};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::precoding::PrecoderSet;
use crate::scenario::db_to_linear;
use lp::{LinearProgram, LpSolution, LpStatus};

/// Relative tolerance used when checking the budget and QoS rows.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// One UE's QoS constraint with `ϱ_kj = |h_kᴴ w̃_j|` for `j = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct QosRow {
    /// UE index, 1-based.
    pub k: usize,
    pub rho: Vec<f64>,
    /// Linear SINR threshold.
    pub gamma: f64,
    pub sigma_nc2: f64,
}

impl QosRow {
    pub fn own_gain(&self) -> f64 {
        self.rho[self.k]
    }

    /// A row whose own coefficient vanishes can never be met with `Γ > 0`.
    pub fn is_infeasible(&self) -> bool {
        self.gamma > 0.0 && !(self.own_gain() > 0.0)
    }

    /// Coefficients `a_j` of `Σ_j a_j p_j ≤ −1`, in units of the noise power.
    pub fn linear_coefficients(&self) -> Vec<f64> {
        self.rho
            .iter()
            .enumerate()
            .map(|(j, r)| {
                let g = r * r / self.sigma_nc2;
                if j == self.k {
                    -g / self.gamma
                } else {
                    g
                }
            })
            .collect()
    }

    /// `(p_k ϱ_kk²/Γ − Σ_{j≠k} ϱ_kj² p_j − σ²) / σ²`; nonnegative when met.
    pub fn slack(&self, p: &[f64]) -> f64 {
        -1.0 - self.linear_coefficients().iter().zip(p).map(|(a, v)| a * v).sum::<f64>()
    }

    pub fn satisfied_linear(&self, p: &[f64]) -> bool {
        self.slack(p) >= -FEASIBILITY_TOL
    }

    /// Evaluates the cone form `‖[ϱ_kj √p_j]_{j≠k}, σ‖ ≤ √p_k ϱ_kk / √Γ`.
    pub fn satisfied_soc(&self, p: &[f64]) -> bool {
        let lhs = self
            .rho
            .iter()
            .zip(p)
            .enumerate()
            .filter(|(j, _)| *j != self.k)
            .map(|(_, (r, v))| r * r * v)
            .sum::<f64>()
            + self.sigma_nc2;
        let rhs = p[self.k].sqrt() * self.own_gain() / self.gamma.sqrt();
        lhs.sqrt() <= rhs * (1.0 + FEASIBILITY_TOL) + f64::MIN_POSITIVE
    }
}

pub fn build_qos_rows(h: &CMatrix, precoders: &PrecoderSet, gamma_db: f64, sigma_nc2: f64) -> Result<Vec<QosRow>> {
    if precoders.streams() != h.ncols() + 1 || precoders.antennas() != h.nrows() {
        return Err(Error::Dimension("precoders do not match the channel matrix".into()));
    }
    let gamma = db_to_linear(gamma_db);
    Ok((1..=h.ncols())
        .map(|k| QosRow {
            k,
            rho: precoders.w_tilde.iter().map(|w| h.column(k - 1).dotc(w).norm()).collect(),
            gamma,
            sigma_nc2,
        })
        .collect())
}

/// Objective gains of the fused detector, `c_k = Σ_r Re[W̃ᴴ B_rᴴ B_r W̃]_kk`.
pub fn objective_gains(b: &[CMatrix], precoders: &PrecoderSet) -> Vec<f64> {
    let wt = precoders.directions();
    let mut c = vec![0.0; precoders.streams()];
    for br in b {
        let bw = br * &wt;
        for (k, ck) in c.iter_mut().enumerate() {
            *ck += bw.column(k).norm_squared();
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationStatus {
    Optimal,
    Infeasible,
    /// The solver stopped without a certified optimum.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    /// Powers `p_0..p_K` in mW.
    pub p: Vec<f64>,
    pub status: AllocationStatus,
    pub objective: f64,
    /// Normalized QoS slacks, followed by the relative budget slack when a budget applies.
    pub slacks: Vec<f64>,
    /// Relative primal-dual gap of the underlying LP.
    pub gap: f64,
    pub iterations: usize,
}

impl AllocationResult {
    fn infeasible(streams: usize, iterations: usize) -> Self {
        Self {
            p: vec![0.0; streams],
            status: AllocationStatus::Infeasible,
            objective: f64::NAN,
            slacks: Vec::new(),
            gap: f64::INFINITY,
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == AllocationStatus::Optimal
    }

    pub fn total_power(&self) -> f64 {
        self.p.iter().sum()
    }
}

fn status_of(s: &LpSolution) -> AllocationStatus {
    match s.status {
        LpStatus::Optimal => AllocationStatus::Optimal,
        LpStatus::Infeasible => AllocationStatus::Infeasible,
        LpStatus::Unbounded | LpStatus::IterationLimit => AllocationStatus::Degenerate,
    }
}

/// Whether the dedicated sensing stream may carry power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensingStream {
    Included,
    Excluded,
}

/// Problem P2: maximize `Σ c_k p_k` subject to every QoS row, `‖p‖₁ ≤ P_max` and `p ≥ 0`.
pub fn solve_p2(rows: &[QosRow], gains: &[f64], p_max: f64, sensing: SensingStream) -> Result<AllocationResult> {
    let streams = gains.len();
    if rows.iter().any(|r| r.rho.len() != streams) {
        return Err(Error::Dimension("QoS rows and gains disagree on the stream count".into()));
    }
    if !(p_max >= 0.0) || !p_max.is_finite() {
        return Err(Error::Domain(format!("power budget must be finite and nonnegative, got {p_max}")));
    }
    if rows.iter().any(QosRow::is_infeasible) {
        return Ok(AllocationResult::infeasible(streams, 0));
    }
    let vars: Vec<usize> = match sensing {
        SensingStream::Included => (0..streams).collect(),
        SensingStream::Excluded => (1..streams).collect(),
    };
    let scale = if p_max > 0.0 { p_max } else { 1.0 };
    let cmax = gains.iter().copied().fold(0.0, f64::max);
    let objective: Vec<f64> = vars
        .iter()
        .map(|&j| if cmax > 0.0 { gains[j] / cmax } else { 0.0 })
        .collect();
    let mut lp_rows = Vec::with_capacity(rows.len() + 1);
    let mut rhs = Vec::with_capacity(rows.len() + 1);
    for row in rows {
        let a = row.linear_coefficients();
        lp_rows.push(vars.iter().map(|&j| a[j] * scale).collect());
        rhs.push(-1.0);
    }
    lp_rows.push(vec![1.0; vars.len()]);
    rhs.push(p_max / scale);
    let sol = LinearProgram::new(objective, lp_rows, rhs).solve();
    let status = status_of(&sol);
    if status != AllocationStatus::Optimal {
        return Ok(AllocationResult { status, ..AllocationResult::infeasible(streams, sol.iterations) });
    }
    let mut p = vec![0.0; streams];
    for (v, &j) in sol.x.iter().zip(&vars) {
        p[j] = v * scale;
    }
    let mut slacks: Vec<f64> = rows.iter().map(|r| r.slack(&p)).collect();
    slacks.push(if p_max > 0.0 { (p_max - p.iter().sum::<f64>()) / p_max } else { -p.iter().sum::<f64>() });
    Ok(AllocationResult {
        objective: gains.iter().zip(&p).map(|(c, v)| c * v).sum(),
        p,
        status,
        slacks,
        gap: sol.gap.max(sol.dual_infeasibility.max(0.0)),
        iterations: sol.iterations,
    })
}

/// Inner problem P_A: minimize `Σ_{k≥1} p_k` subject to every QoS row with `p_0` fixed.
pub fn solve_pa(rows: &[QosRow], p0: f64) -> Result<AllocationResult> {
    if !(p0 >= 0.0) || !p0.is_finite() {
        return Err(Error::Domain(format!("sensing power must be finite and nonnegative, got {p0}")));
    }
    let Some(first) = rows.first() else {
        return Ok(AllocationResult {
            p: vec![p0],
            status: AllocationStatus::Optimal,
            objective: 0.0,
            slacks: Vec::new(),
            gap: 0.0,
            iterations: 0,
        });
    };
    let streams = first.rho.len();
    if rows.iter().any(|r| r.rho.len() != streams) {
        return Err(Error::Dimension("QoS rows disagree on the stream count".into()));
    }
    if rows.iter().any(QosRow::is_infeasible) {
        return Ok(AllocationResult::infeasible(streams, 0));
    }
    let scale: f64 = rows.iter().map(|r| r.gamma * r.sigma_nc2 / (r.own_gain() * r.own_gain())).sum::<f64>();
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let mut lp_rows = Vec::with_capacity(rows.len());
    let mut rhs = Vec::with_capacity(rows.len());
    for row in rows {
        let a = row.linear_coefficients();
        lp_rows.push(a[1..].iter().map(|v| v * scale).collect());
        rhs.push(-1.0 - a[0] * p0);
    }
    let sol = LinearProgram::new(vec![-1.0; streams - 1], lp_rows, rhs).solve();
    let status = status_of(&sol);
    if status != AllocationStatus::Optimal {
        return Ok(AllocationResult { status, ..AllocationResult::infeasible(streams, sol.iterations) });
    }
    let mut p = vec![p0];
    p.extend(sol.x.iter().map(|v| v * scale));
    Ok(AllocationResult {
        objective: p[1..].iter().sum(),
        slacks: rows.iter().map(|r| r.slack(&p)).collect(),
        p,
        status,
        gap: sol.gap.max(sol.dual_infeasibility.max(0.0)),
        iterations: sol.iterations,
    })
}

/// Largest sensing power compatible with every QoS row and the budget.
pub fn largest_feasible_p0(rows: &[QosRow], p_max: f64) -> Result<Option<f64>> {
    let streams = rows.first().map_or(1, |r| r.rho.len());
    let mut gains = vec![0.0; streams];
    gains[0] = 1.0;
    let r = solve_p2(rows, &gains, p_max, SensingStream::Included)?;
    Ok(r.is_optimal().then(|| r.p[0]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Algorithm1Result {
    pub allocation: AllocationResult,
    /// Inner problems solved.
    pub iterations: usize,
    pub step: f64,
}

/// Descends `p_0` from `P_max` in steps of `delta_p_frac · P_max`, solving P_A at
/// each point, and stops at the first allocation whose total power fits the budget.
/// A final attempt at `p_0 = 0` is made before declaring the instance infeasible.
pub fn algorithm1(rows: &[QosRow], p_max: f64, delta_p_frac: f64) -> Result<Algorithm1Result> {
    if !(delta_p_frac > 0.0 && delta_p_frac <= 1.0) {
        return Err(Error::Domain(format!("step fraction must lie in (0,1], got {delta_p_frac}")));
    }
    if !(p_max >= 0.0) || !p_max.is_finite() {
        return Err(Error::Domain(format!("power budget must be finite and nonnegative, got {p_max}")));
    }
    let streams = rows.first().map_or(1, |r| r.rho.len());
    let step = delta_p_frac * p_max;
    let mut iterations = 0;
    let mut j = 0usize;
    loop {
        let mut p0 = p_max - j as f64 * step;
        let last = p0 <= 1e-12 * p_max;
        if last {
            p0 = 0.0;
        }
        iterations += 1;
        let inner = solve_pa(rows, p0)?;
        if inner.is_optimal() && inner.total_power() <= p_max * (1.0 + 1e-12) {
            let mut allocation = inner;
            allocation.slacks.push(if p_max > 0.0 { (p_max - allocation.total_power()) / p_max } else { 0.0 });
            return Ok(Algorithm1Result { allocation, iterations, step });
        }
        if last {
            return Ok(Algorithm1Result {
                allocation: AllocationResult::infeasible(streams, 0),
                iterations,
                step,
            });
        }
        j += 1;
    }
}

/// Best point of an exhaustive `p_0` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBound {
    pub p0: f64,
    pub value: f64,
    pub p: Vec<f64>,
    pub feasible_points: usize,
}

/// Evaluates `objective` at P_A's solution on `grid_points` uniform values of
/// `p_0 ∈ [0, P_max]` and keeps the best budget-feasible one.
pub fn grid_upper_bound<F>(rows: &[QosRow], p_max: f64, grid_points: usize, mut objective: F) -> Result<Option<GridBound>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if grid_points < 2 {
        return Err(Error::Domain("the grid needs at least two points".into()));
    }
    let mut best: Option<GridBound> = None;
    let mut feasible = 0;
    for i in 0..grid_points {
        let p0 = p_max * i as f64 / (grid_points - 1) as f64;
        let inner = solve_pa(rows, p0)?;
        if !inner.is_optimal() || inner.total_power() > p_max * (1.0 + 1e-12) {
            continue;
        }
        feasible += 1;
        let value = objective(&inner.p)?;
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(GridBound { p0, value, p: inner.p, feasible_points: 0 });
        }
    }
    Ok(best.map(|b| GridBound { feasible_points: feasible, ..b }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTradeoff {
    pub step_frac: f64,
    pub runtime_ms: f64,
    pub iterations: usize,
    pub total_rho_db: f64,
}

/// Runs [`algorithm1`] once per step and records wall time, iteration count and
/// `10 log10(Σ_r ρ_r)` of the resulting allocation.
pub fn stepsize_tradeoff<F>(rows: &[QosRow], p_max: f64, steps: &[f64], mut total_rho: F) -> Result<Vec<StepTradeoff>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    steps
        .iter()
        .map(|&step_frac| {
            let start = Instant::now();
            let r = algorithm1(rows, p_max, step_frac)?;
            let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            let total_rho_db = if r.allocation.is_optimal() {
                10.0 * total_rho(&r.allocation.p)?.log10()
            } else {
                f64::NAN
            };
            Ok(StepTradeoff { step_frac, runtime_ms, iterations: r.iterations, total_rho_db })
        })
        .collect()
}

/// Plain-text instance of a power-allocation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub rows: Vec<QosRow>,
    pub gains: Vec<f64>,
    pub p_max: f64,
}

const PROBLEM_HEADER: &str = "# iaps power allocation v1";

impl ProblemInstance {
    /// Format: a header line, `p_max <mW>`, `gains c_0 .. c_K`, then one
    /// `qos k gamma sigma_nc2 rho_k0 .. rho_kK` line per UE.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{PROBLEM_HEADER}")?;
        writeln!(out, "p_max {:e}", self.p_max)?;
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        writeln!(out, "gains {}", join(&self.gains))?;
        for r in &self.rows {
            writeln!(out, "qos {} {:e} {:e} {}", r.k, r.gamma, r.sigma_nc2, join(&r.rho))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let bad = |msg: String| Error::Config(format!("problem file: {msg}"));
        let num = |t: &str| t.parse::<f64>().map_err(|e| bad(format!("bad number {t:?}: {e}")));
        let mut p_max = None;
        let mut gains = None;
        let mut rows = Vec::new();
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            match it.next() {
                Some("p_max") => p_max = Some(num(it.next().ok_or_else(|| bad("missing p_max".into()))?)?),
                Some("gains") => gains = Some(it.map(num).collect::<Result<Vec<_>>>()?),
                Some("qos") => {
                    let k = it
                        .next()
                        .and_then(|t| t.parse::<usize>().ok())
                        .ok_or_else(|| bad("missing UE index".into()))?;
                    let gamma = num(it.next().ok_or_else(|| bad("missing gamma".into()))?)?;
                    let sigma_nc2 = num(it.next().ok_or_else(|| bad("missing noise".into()))?)?;
                    let rho = it.map(num).collect::<Result<Vec<_>>>()?;
                    rows.push(QosRow { k, rho, gamma, sigma_nc2 });
                }
                Some(other) => return Err(bad(format!("unknown record {other:?}"))),
                None => {}
            }
        }
        Ok(Self {
            rows,
            gains: gains.ok_or_else(|| bad("missing gains".into()))?,
            p_max: p_max.ok_or_else(|| bad("missing p_max".into()))?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, rho: &[f64], gamma: f64) -> QosRow {
        QosRow { k, rho: rho.to_vec(), gamma, sigma_nc2: 1.0 }
    }

    #[test]
    fn single_user_closed_forms() {
        let rows = [row(1, &[0.5, 2.0], 10.0)];
        let pa = solve_pa(&rows, 3.0).unwrap();
        assert!((pa.p[1] - 10.0 * (1.0 + 0.25 * 3.0) / 4.0).abs() < 1e-12);
        let p2 = solve_p2(&rows, &[5.0, 1.0], 20.0, SensingStream::Included).unwrap();
        assert!(p2.is_optimal());
        assert!((p2.total_power() - 20.0).abs() < 1e-9);
        assert!(p2.gap < 1e-9);
        assert!(rows[0].satisfied_linear(&p2.p) && rows[0].satisfied_soc(&p2.p));
    }

    #[test]
    fn all_mass_on_best_gain_when_qos_is_free() {
        let rows = [row(1, &[0.0, 1.0, 0.1], 1e-12), row(2, &[0.0, 0.2, 1.0], 1e-12)];
        let r = solve_p2(&rows, &[9.0, 1.0, 2.0], 100.0, SensingStream::Included).unwrap();
        assert!((r.p[0] - 100.0).abs() < 1e-6, "{:?}", r.p);
    }

    #[test]
    fn zero_own_gain_is_infeasible() {
        let rows = [row(1, &[0.0, 0.0], 1.0)];
        assert_eq!(solve_pa(&rows, 0.0).unwrap().status, AllocationStatus::Infeasible);
        assert_eq!(solve_p2(&rows, &[1.0, 1.0], 1.0, SensingStream::Included).unwrap().status, AllocationStatus::Infeasible);
    }

    #[test]
    fn algorithm1_loop_arithmetic() {
        // P_A needs 10 units regardless of p0; with P_max = 100 and step 3 the
        // first fitting iterate is p0 = 100 - 4*3 = 88.
        let rows = [row(1, &[0.0, 1.0], 10.0)];
        let r = algorithm1(&rows, 100.0, 0.03).unwrap();
        assert!(r.allocation.is_optimal());
        assert!((r.allocation.p[0] - 88.0).abs() < 1e-9);
        assert_eq!(r.iterations, 5);
        let big = algorithm1(&rows, 100.0, 1.0).unwrap();
        assert!(big.iterations <= 2);
        assert_eq!(big.allocation.p[0], 0.0);
        let hopeless = algorithm1(&[row(1, &[0.0, 1.0], 1e6)], 100.0, 0.25).unwrap();
        assert_eq!(hopeless.allocation.status, AllocationStatus::Infeasible);
    }

    #[test]
    fn problem_text_round_trip() {
        let inst = ProblemInstance { rows: vec![row(1, &[0.1, 2.0, 0.3], 31.6), row(2, &[0.0, 0.4, 1.5], 31.6)], gains: vec![3.0, 1.0, 0.5], p_max: 1000.0 };
        let mut buf = Vec::new();
        inst.write(&mut buf).unwrap();
        assert_eq!(ProblemInstance::read(&buf[..]).unwrap(), inst);
    }
}
