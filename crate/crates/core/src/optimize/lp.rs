//! Dense two-phase simplex for small linear programs.
//!
//! Solves `max cᵀx  s.t.  A x ≤ b, x ≥ 0` with Bland's anti-cycling rule on an
//! equilibrated tableau, then recovers dual prices from the optimal basis on the
//! original data so every optimum comes with an independent certificate.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const MAX_ITERATIONS: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Dual prices, one per constraint row.
    pub duals: Vec<f64>,
    /// `b − A x` per row.
    pub slacks: Vec<f64>,
    pub dual_objective: f64,
    /// `|cᵀx − bᵀy| / max(1, |cᵀx|)`.
    pub gap: f64,
    /// Largest violation of `Aᵀy ≥ c`, `y ≥ 0`, relative to the data scale.
    pub dual_infeasibility: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn failed(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            duals: vec![0.0; m],
            slacks: vec![f64::NAN; m],
            dual_objective: f64::NAN,
            gap: f64::INFINITY,
            dual_infeasibility: f64::INFINITY,
            iterations,
        }
    }
}

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.width]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost · columns` over the allowed columns.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool], iterations: &mut usize) -> LpStatus {
        loop {
            if *iterations >= MAX_ITERATIONS {
                return LpStatus::IterationLimit;
            }
            let entering = (0..self.width).find(|&j| {
                if !allowed[j] || self.basis.contains(&j) {
                    return false;
                }
                let d = cost[j] - self.t.iter().zip(&self.basis).map(|(r, &b)| cost[b] * r[j]).sum::<f64>();
                d > FEAS_TOL
            });
            let Some(col) = entering else {
                return LpStatus::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][col];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12 * br.abs().max(1.0)
                                || (ratio <= br + 1e-12 * br.abs().max(1.0) && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return LpStatus::Unbounded;
            };
            self.pivot(row, col);
            *iterations += 1;
        }
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Self {
        Self { objective, rows, rhs }
    }

    pub fn solve(&self) -> LpSolution {
        let n = self.objective.len();
        let m = self.rows.len();
        assert_eq!(self.rhs.len(), m, "one right-hand side per row");
        assert!(self.rows.iter().all(|r| r.len() == n), "rows must match the objective length");

        let mut active = Vec::with_capacity(m);
        for i in 0..m {
            let scale = self.rows[i].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if scale == 0.0 {
                if self.rhs[i] < -FEAS_TOL {
                    return LpSolution::failed(LpStatus::Infeasible, n, m, 0);
                }
                continue;
            }
            active.push((i, scale));
        }

        let artificial: Vec<usize> = active
            .iter()
            .filter(|(i, s)| self.rhs[*i] / s < 0.0)
            .map(|(i, _)| *i)
            .collect();
        let width = n + m + artificial.len();
        let mut t = Vec::with_capacity(active.len());
        let mut basis = Vec::with_capacity(active.len());
        for &(i, scale) in &active {
            let sign = if self.rhs[i] / scale < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; width + 1];
            for j in 0..n {
                row[j] = sign * self.rows[i][j] / scale;
            }
            row[n + i] = sign;
            row[width] = sign * self.rhs[i] / scale;
            if sign < 0.0 {
                let a = n + m + artificial.iter().position(|&k| k == i).unwrap();
                row[a] = 1.0;
                basis.push(a);
            } else {
                basis.push(n + i);
            }
            t.push(row);
        }
        let mut tab = Tableau { t, basis, width };
        let mut iterations = 0;
        let is_artificial = |j: usize| j >= n + m;

        if !artificial.is_empty() {
            let cost: Vec<f64> = (0..width).map(|j| if is_artificial(j) { -1.0 } else { 0.0 }).collect();
            let allowed = vec![true; width];
            let status = tab.optimize(&cost, &allowed, &mut iterations);
            if status != LpStatus::Optimal {
                return LpSolution::failed(status, n, m, iterations);
            }
            let infeasibility: f64 = (0..tab.t.len())
                .filter(|&i| is_artificial(tab.basis[i]))
                .map(|i| tab.rhs(i))
                .sum();
            if infeasibility > FEAS_TOL {
                return LpSolution::failed(LpStatus::Infeasible, n, m, iterations);
            }
            let mut i = 0;
            while i < tab.t.len() {
                if is_artificial(tab.basis[i]) {
                    let col = (0..n + m)
                        .filter(|j| !tab.basis.contains(j))
                        .max_by(|&a, &b| tab.t[i][a].abs().total_cmp(&tab.t[i][b].abs()))
                        .filter(|&j| tab.t[i][j].abs() > 1e-9);
                    match col {
                        Some(j) => tab.pivot(i, j),
                        None => {
                            tab.t.remove(i);
                            tab.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }

        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&self.objective);
        let allowed: Vec<bool> = (0..width).map(|j| !is_artificial(j)).collect();
        let status = tab.optimize(&cost, &allowed, &mut iterations);
        if status != LpStatus::Optimal {
            return LpSolution::failed(status, n, m, iterations);
        }

        let mut x = vec![0.0; n];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < n {
                x[b] = tab.rhs(i).max(0.0);
            }
        }
        self.certify(x, &tab.basis, iterations)
    }

    /// Builds primal slacks and dual prices for a basis given as standard-form column indices.
    fn certify(&self, x: Vec<f64>, basis: &[usize], iterations: usize) -> LpSolution {
        let n = self.objective.len();
        let m = self.rows.len();
        let slacks: Vec<f64> = (0..m)
            .map(|i| self.rhs[i] - self.rows[i].iter().zip(&x).map(|(a, v)| a * v).sum::<f64>())
            .collect();
        let objective: f64 = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();

        // Rows dropped as redundant get a zero price; the rest solve Bᵀy = c_B.
        let mut basic_cols: Vec<usize> = basis.to_vec();
        let slack_basic: Vec<usize> = (0..m).filter(|i| basic_cols.contains(&(n + i))).collect();
        let missing: Vec<usize> = (0..m).filter(|i| !slack_basic.contains(i)).collect();
        while basic_cols.len() < m {
            // Complete with slacks of rows not represented, which carry zero price.
            let extra = missing
                .iter()
                .map(|i| n + i)
                .find(|c| !basic_cols.contains(c))
                .expect("basis completion");
            basic_cols.push(extra);
        }
        let column = |j: usize| -> DVector<f64> {
            if j < n {
                DVector::from_fn(m, |i, _| self.rows[i][j])
            } else {
                let mut e = DVector::zeros(m);
                e[j - n] = 1.0;
                e
            }
        };
        let mut bmat = DMatrix::zeros(m, m);
        for (c, &j) in basic_cols.iter().enumerate() {
            bmat.set_column(c, &column(j));
        }
        let cb = DVector::from_fn(m, |c, _| if basic_cols[c] < n { self.objective[basic_cols[c]] } else { 0.0 });
        let duals: Vec<f64> = match bmat.transpose().lu().solve(&cb) {
            Some(y) => y.iter().copied().collect(),
            None => vec![f64::NAN; m],
        };
        let dual_objective: f64 = self.rhs.iter().zip(&duals).map(|(b, y)| b * y).sum();
        let scale = self
            .objective
            .iter()
            .map(|v| v.abs())
            .fold(1e-300f64, f64::max);
        let mut dual_infeasibility = duals.iter().map(|&y| (-y).max(0.0)).fold(0.0, f64::max) / scale;
        for j in 0..n {
            let ay: f64 = (0..m).map(|i| self.rows[i][j] * duals[i]).sum();
            dual_infeasibility = dual_infeasibility.max((self.objective[j] - ay) / scale);
        }
        if duals.iter().any(|y| !y.is_finite()) {
            dual_infeasibility = f64::INFINITY;
        }
        LpSolution {
            status: LpStatus::Optimal,
            gap: (objective - dual_objective).abs() / objective.abs().max(1.0),
            x,
            objective,
            duals,
            slacks,
            dual_objective,
            dual_infeasibility,
            iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36.
        let lp = LinearProgram::new(
            vec![3.0, 5.0],
            vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            vec![4.0, 12.0, 18.0],
        );
        let s = lp.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!(s.gap < 1e-12 && s.dual_infeasibility < 1e-12);
        assert!((s.duals[1] - 1.5).abs() < 1e-12 && (s.duals[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // min x + y s.t. x + 2y ≥ 4, 3x + y ≥ 6 → (1.6, 1.2).
        let lp = LinearProgram::new(
            vec![-1.0, -1.0],
            vec![vec![-1.0, -2.0], vec![-3.0, -1.0]],
            vec![-4.0, -6.0],
        );
        let s = lp.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.6).abs() < 1e-12 && (s.x[1] - 1.2).abs() < 1e-12);
        assert!(s.gap < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram::new(vec![1.0], vec![vec![1.0], vec![-1.0]], vec![1.0, -2.0]);
        assert_eq!(lp.solve().status, LpStatus::Infeasible);
        let lp = LinearProgram::new(vec![1.0, 0.0], vec![vec![-1.0, 1.0]], vec![1.0]);
        assert_eq!(lp.solve().status, LpStatus::Unbounded);
        let lp = LinearProgram::new(vec![1.0], vec![vec![0.0]], vec![-1.0]);
        assert_eq!(lp.solve().status, LpStatus::Infeasible);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Klee–Minty style degeneracy: several constraints meet at the optimum.
        let lp = LinearProgram::new(
            vec![1.0, 1.0],
            vec![vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 2.0]],
            vec![1.0, 1.0, 1.0, 2.0],
        );
        let s = lp.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!(s.gap < 1e-12 && s.dual_infeasibility < 1e-12);
    }
}
