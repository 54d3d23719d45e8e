//! Complex dense linear algebra helpers shared by the precoding and detection code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Condition-number ceiling above which factorizations are rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Draws one circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> CMatrix {
    // Column-major fill keeps the draw order stable across nalgebra versions.
    let mut m = CMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng, variance);
        }
    }
    m
}

/// Cholesky factor of a Hermitian positive-definite matrix with a condition guard.
///
/// The guard compares the extreme squared diagonal entries of the factor, a
/// cheap lower bound on the 2-norm condition number.
pub fn cholesky(m: &CMatrix) -> Result<nalgebra::Cholesky<C64, nalgebra::Dyn>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "cholesky needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("matrix is not positive definite".into()))?;
    let l = chol.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..m.nrows() {
        let d = l[(i, i)].norm_sqr();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if !(lo > 0.0) || hi / lo > CONDITION_LIMIT {
        return Err(Error::Numeric(format!(
            "ill-conditioned Hermitian system (diagonal ratio {:.3e})",
            hi / lo
        )));
    }
    Ok(chol)
}

pub fn hermitian_inverse(m: &CMatrix) -> Result<CMatrix> {
    Ok(cholesky(m)?.inverse())
}

/// Rescales `v` by a unit-modulus factor so its first nonzero entry is real and nonnegative.
pub fn fix_phase(v: &mut CVector) {
    if let Some(first) = v.iter().find(|z| z.norm() > 0.0).copied() {
        let rot = first.conj() / first.norm();
        v.iter_mut().for_each(|z| *z *= rot);
    }
}

pub fn normalized(v: &CVector) -> Option<CVector> {
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| v / C64::new(n, 0.0))
}

/// Real trace of a (Hermitian) matrix.
pub fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).camax() <= tol * m.camax().max(1.0)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn real_vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
