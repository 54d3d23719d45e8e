//! Minimal complex arithmetic and dense row-major matrices.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct C {
    pub re: f64,
    pub im: f64,
}

impl C {
    pub const ZERO: C = C { re: 0.0, im: 0.0 };
    pub const ONE: C = C { re: 1.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn abs2(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> f64 {
        self.abs2().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.re * s, self.im * s)
    }
}

impl Add for C {
    type Output = C;
    fn add(self, o: C) -> C {
        C::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for C {
    type Output = C;
    fn sub(self, o: C) -> C {
        C::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for C {
    type Output = C;
    fn mul(self, o: C) -> C {
        C::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

impl Div for C {
    type Output = C;
    fn div(self, o: C) -> C {
        let d = o.abs2();
        (self * o.conj()).scale(1.0 / d)
    }
}

impl Neg for C {
    type Output = C;
    fn neg(self) -> C {
        C::new(-self.re, -self.im)
    }
}

/// Dense matrix stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C::ONE);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> C {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<C> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn adjoint(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn matmul(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.rows);
        Mat::from_fn(self.rows, o.cols, |r, c| {
            (0..self.cols).fold(C::ZERO, |acc, k| acc + self.get(r, k) * o.get(k, c))
        })
    }

    pub fn matvec(&self, v: &[C]) -> Vec<C> {
        (0..self.rows)
            .map(|r| (0..self.cols).fold(C::ZERO, |acc, k| acc + self.get(r, k) * v[k]))
            .collect()
    }

    pub fn add_diag(&self, s: f64) -> Mat {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m.set(i, i, m.get(i, i) + C::new(s, 0.0));
        }
        m
    }

    pub fn trace(&self) -> C {
        (0..self.rows.min(self.cols)).fold(C::ZERO, |acc, i| acc + self.get(i, i))
    }

    /// Gauss-Jordan inverse with partial pivoting; `None` if singular.
    pub fn inverse(&self) -> Option<Mat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a.get(i, col).abs().total_cmp(&a.get(j, col).abs()))?;
            if a.get(piv, col).abs() < 1e-300 {
                return None;
            }
            for c in 0..n {
                let (x, y) = (a.get(col, c), a.get(piv, c));
                a.set(col, c, y);
                a.set(piv, c, x);
                let (x, y) = (inv.get(col, c), inv.get(piv, c));
                inv.set(col, c, y);
                inv.set(piv, c, x);
            }
            let d = a.get(col, col);
            for c in 0..n {
                a.set(col, c, a.get(col, c) / d);
                inv.set(col, c, inv.get(col, c) / d);
            }
            for r in 0..n {
                if r != col {
                    let f = a.get(r, col);
                    for c in 0..n {
                        a.set(r, c, a.get(r, c) - f * a.get(col, c));
                        inv.set(r, c, inv.get(r, c) - f * inv.get(col, c));
                    }
                }
            }
        }
        Some(inv)
    }
}

pub fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).fold(C::ZERO, |acc, (x, y)| acc + x.conj() * *y)
}

pub fn norm(v: &[C]) -> f64 {
    v.iter().map(|x| x.abs2()).sum::<f64>().sqrt()
}

/// Scales `v` to unit norm and rotates it so its first nonzero entry is real positive.
pub fn unit_with_phase(v: &[C]) -> Vec<C> {
    let n = norm(v);
    let lead = v.iter().copied().find(|x| x.abs() > 1e-300).unwrap_or(C::ONE);
    let rot = lead.conj().scale(1.0 / lead.abs());
    v.iter().map(|x| (*x * rot).scale(1.0 / n)).collect()
}

/// Component of `a` orthogonal to the columns of `h`, via twice-repeated
/// modified Gram-Schmidt on those columns.
pub fn orthogonal_complement_projection(h: &Mat, a: &[C]) -> Vec<C> {
    let mut basis: Vec<Vec<C>> = Vec::new();
    for c in 0..h.cols {
        let mut v = h.column(c);
        for _ in 0..2 {
            for q in &basis {
                let d = dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi = *vi - *qi * d;
                }
            }
        }
        let n = norm(&v);
        if n > 1e-12 {
            basis.push(v.iter().map(|x| x.scale(1.0 / n)).collect());
        }
    }
    let mut out = a.to_vec();
    for _ in 0..2 {
        for q in &basis {
            let d = dot(q, &out);
            for (oi, qi) in out.iter_mut().zip(q) {
                *oi = *oi - *qi * d;
            }
        }
    }
    out
}

/// RZF directions from the textbook form `(H Hᴴ + λ I)⁻¹ H`, unit-normed and phase-fixed.
pub fn rzf_directions(h: &Mat, lambda: f64) -> Option<Vec<Vec<C>>> {
    let g = h.matmul(&h.adjoint()).add_diag(lambda).inverse()?;
    let w = g.matmul(h);
    Some((0..w.cols).map(|c| unit_with_phase(&w.column(c))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = Mat::zeros(rows, cols);
        for v in m.data.iter_mut() {
            *v = C::new(next(), next());
        }
        m
    }

    #[test]
    fn inverse_round_trip() {
        let a = sample(5, 5, 3).add_diag(2.0);
        let p = a.matmul(&a.inverse().unwrap());
        for r in 0..5 {
            for c in 0..5 {
                let e = if r == c { C::ONE } else { C::ZERO };
                assert!((p.get(r, c) - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn complement_is_orthogonal() {
        let h = sample(6, 3, 9);
        let a = sample(6, 1, 4).column(0);
        let v = orthogonal_complement_projection(&h, &a);
        for c in 0..3 {
            assert!(dot(&h.column(c), &v).abs() < 1e-12);
        }
    }
}
