//! Linear programs by exhaustive vertex enumeration and by grid search.

/// Best vertex of `max cᵀx s.t. Ax ≤ b, x ≥ 0`, or `None` if no vertex is feasible.
pub fn vertex_enumeration(c: &[f64], a: &[Vec<f64>], b: &[f64], tol: f64) -> Option<(Vec<f64>, f64)> {
    let n = c.len();
    let m = a.len();
    // Constraint i < m is row i; i ≥ m is x_{i−m} ≥ 0 written as −x ≤ 0.
    let row = |i: usize| -> (Vec<f64>, f64) {
        if i < m {
            (a[i].clone(), b[i])
        } else {
            let mut r = vec![0.0; n];
            r[i - m] = -1.0;
            (r, 0.0)
        }
    };
    let total = m + n;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let (mat, rhs): (Vec<Vec<f64>>, Vec<f64>) = pick.iter().map(|&i| row(i)).unzip();
        if let Some(x) = solve_dense(mat, rhs) {
            let feasible = (0..total).all(|i| {
                let (r, bi) = row(i);
                let lhs: f64 = r.iter().zip(&x).map(|(u, v)| u * v).sum();
                lhs <= bi + tol * (1.0 + bi.abs())
            });
            if feasible {
                let val: f64 = c.iter().zip(&x).map(|(u, v)| u * v).sum();
                if best.as_ref().is_none_or(|(_, bv)| val > *bv) {
                    best = Some((x, val));
                }
            }
        }
        if !next_combination(&mut pick, total) {
            break;
        }
    }
    best
}

fn next_combination(pick: &mut [usize], total: usize) -> bool {
    let k = pick.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if pick[i] < total - k + i {
            pick[i] += 1;
            for j in i + 1..k {
                pick[j] = pick[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting; `None` when (near) singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Best feasible point of a uniform grid over the box `[0, upper_j]`, `steps` cells per axis.
pub fn grid_search(c: &[f64], a: &[Vec<f64>], b: &[f64], upper: &[f64], steps: usize) -> Option<(Vec<f64>, f64)> {
    let n = c.len();
    let mut idx = vec![0usize; n];
    let mut best: Option<(Vec<f64>, f64)> = None;
    loop {
        let x: Vec<f64> = idx.iter().zip(upper).map(|(&i, &u)| u * i as f64 / steps as f64).collect();
        let ok = a
            .iter()
            .zip(b)
            .all(|(r, bi)| r.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() <= *bi + 1e-12 * (1.0 + bi.abs()));
        if ok {
            let val: f64 = c.iter().zip(&x).map(|(u, v)| u * v).sum();
            if best.as_ref().is_none_or(|(_, bv)| val > *bv) {
                best = Some((x, val));
            }
        }
        let mut d = 0;
        loop {
            if d == n {
                return best;
            }
            idx[d] += 1;
            if idx[d] <= steps {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36.
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]];
        let (x, v) = vertex_enumeration(&[3.0, 5.0], &a, &[4.0, 12.0, 18.0], 1e-12).unwrap();
        assert!((v - 36.0).abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
        let (_, g) = grid_search(&[3.0, 5.0], &a, &[4.0, 12.0, 18.0], &[4.0, 6.0], 12).unwrap();
        assert!((g - 36.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_has_no_vertex() {
        let a = vec![vec![1.0, 1.0], vec![-1.0, -1.0]];
        assert!(vertex_enumeration(&[1.0, 1.0], &a, &[1.0, -2.0], 1e-12).is_none());
    }
}
