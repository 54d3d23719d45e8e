#![allow(dead_code)]

use iaps_core::linalg::{complex_normal_matrix, CMatrix, CVector, C64};
use iaps_core::optimize::QosRow;
use iaps_oracle::complex::{Mat, C};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_oracle(m: &CMatrix) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |r, c| C::new(m[(r, c)].re, m[(r, c)].im))
}

pub fn vec_to_oracle(v: &CVector) -> Vec<C> {
    v.iter().map(|z| C::new(z.re, z.im)).collect()
}

pub fn max_diff(a: &CVector, b: &[C]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - C64::new(y.re, y.im)).norm())
        .fold(0.0, f64::max)
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    complex_normal_matrix(&mut rng(seed), rows, cols, 1.0)
}

/// Synthetic QoS rows with unit noise: `ϱ_kj ~ U(0, 0.3)` off the diagonal, own gain in `[1, 3)`.
pub fn random_rows<R: Rng>(rng: &mut R, users: usize, gamma: f64) -> Vec<QosRow> {
    (1..=users)
        .map(|k| {
            let mut rho: Vec<f64> = (0..=users).map(|_| rng.random_range(0.0..0.3)).collect();
            rho[k] = rng.random_range(1.0..3.0);
            QosRow { k, rho, gamma, sigma_nc2: 1.0 }
        })
        .collect()
}
