//! Reference tables and a bit-exact checksum over them.

use crate::{chi2, vote};

/// Uniform grid `lo + (hi − lo)·i/(n − 1)` for `i = 0..n`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// `(ξ, ρ, P(χ'²₂(ρ) > ξ))` over an `n × n` grid of `[0, 50]²`.
pub fn chi2_grid(n: usize) -> Vec<(f64, f64, f64)> {
    let axis = linspace(0.0, 50.0, n);
    let mut out = Vec::with_capacity(n * n);
    for &xi in &axis {
        for &rho in &axis {
            out.push((xi, rho, chi2::noncentral_sf_2dof(xi, rho)));
        }
    }
    out
}

/// `(voters, κ, P̂_D, P̂_FA, Υ)` for the voter counts `3, 5, 11` on a 20-point probability grid.
pub fn voting_table() -> Vec<(usize, usize, f64, f64, f64)> {
    let grid = linspace(0.02, 0.97, 20);
    let mut out = Vec::new();
    for voters in [3usize, 5, 11] {
        for (i, &pd) in grid.iter().enumerate() {
            let pfa = grid[(i * 7 + 3) % grid.len()] * 0.5;
            for kappa in 1..=voters {
                out.push((voters, kappa, pd, pfa, vote::error_prob_enumerated(kappa, pd, pfa, voters)));
            }
        }
    }
    out
}

/// FNV-1a over the IEEE bit patterns.
pub fn checksum(values: impl IntoIterator<Item = f64>) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

/// Human-readable summary: a few anchor rows plus the checksum of each table.
pub fn render() -> String {
    let chi = chi2_grid(50);
    let votes = voting_table();
    let mut s = String::new();
    s.push_str("table chi2_sf_2dof 50x50 over [0,50]^2\n");
    for &(xi, rho, sf) in chi.iter().step_by(613) {
        s.push_str(&format!("  xi={xi:.6} rho={rho:.6} sf={sf:.15e}\n"));
    }
    s.push_str(&format!("  checksum={:016x}\n", checksum(chi.iter().map(|r| r.2))));
    s.push_str("table voting_error R+1 in {3,5,11}\n");
    for &(n, k, pd, pfa, e) in votes.iter().step_by(97) {
        s.push_str(&format!("  voters={n} kappa={k} pd={pd:.6} pfa={pfa:.6} error={e:.15e}\n"));
    }
    s.push_str(&format!("  checksum={:016x}\n", checksum(votes.iter().map(|r| r.4))));
    s
}
