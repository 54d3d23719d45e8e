//! Fast built-in checks against the reference implementations.

use iaps_core::experiments::output::write_csv;
use iaps_core::experiments::run_figure;
use iaps_core::optimize::{solve_p2, QosRow, SensingStream};
use iaps_core::scenario::ScenarioConfig;
use iaps_core::stats::{noncentral_chi2_sf_2dof, threshold_from_pfa};
use iaps_core::vote::{beta, error_prob, optimal_kappa};
use iaps_oracle::{chi2, lp, tables, vote};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::{load_config, CliResult};
use crate::Common;

type Check = fn() -> Result<String, String>;

fn threshold_anchor() -> Result<String, String> {
    let xi = threshold_from_pfa(1e-5).map_err(|e| e.to_string())?;
    let err = (xi - 23.025850929940457).abs();
    let msg = format!("threshold(1e-5) = {xi:.12}");
    if err <= 1e-10 { Ok(msg) } else { Err(msg) }
}

fn chi2_kernel() -> Result<String, String> {
    let grid = tables::linspace(0.0, 50.0, 11);
    let mut worst: f64 = 0.0;
    for &xi in &grid {
        for &rho in &grid {
            let got = noncentral_chi2_sf_2dof(xi, rho).map_err(|e| e.to_string())?;
            worst = worst.max((got - chi2::noncentral_sf_2dof(xi, rho)).abs());
        }
    }
    let msg = format!("max deviation from quadrature {worst:.1e}");
    if worst <= 1e-9 { Ok(msg) } else { Err(msg) }
}

fn voting() -> Result<String, String> {
    let grid = tables::linspace(0.05, 0.95, 10);
    let mut worst: f64 = 0.0;
    for voters in [3usize, 5] {
        for &pd in &grid {
            for &pfa in &grid {
                for kappa in 1..=voters {
                    let got = error_prob(kappa, pd, pfa, voters).map_err(|e| e.to_string())?;
                    worst = worst.max((got - vote::error_prob_enumerated(kappa, pd, pfa, voters)).abs());
                }
            }
        }
    }
    let worked = error_prob(2, 0.9, 0.1, 3).map_err(|e| e.to_string())?;
    let msg = format!("max deviation from enumeration {worst:.1e}, worked value {worked}");
    if worst <= 1e-12 && (worked - 0.028).abs() <= 1e-15 { Ok(msg) } else { Err(msg) }
}

fn lemmas() -> Result<String, String> {
    let pfa = 1e-3;
    let grid: Vec<f64> = (0..200).map(|i| pfa + (1.0 - pfa) * (i as f64 + 0.5) / 200.0).collect();
    let b: Vec<f64> = grid.iter().map(|&pd| beta(pd, pfa).unwrap()).collect();
    let lemma1 = b.windows(2).all(|w| w[1] < w[0]);
    let e: Vec<f64> = grid
        .iter()
        .map(|&pd| error_prob(optimal_kappa(pd, pfa, 11).unwrap(), pd, pfa, 11).unwrap())
        .collect();
    let lemma2 = e.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let msg = format!("beta decreasing: {lemma1}, optimal error nonincreasing: {lemma2}");
    if lemma1 && lemma2 { Ok(msg) } else { Err(msg) }
}

fn optimizer() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..60 {
        let users = 1 + i % 3;
        let rows: Vec<QosRow> = (1..=users)
            .map(|k| {
                let mut rho: Vec<f64> = (0..=users).map(|_| rng.random_range(0.0..0.3)).collect();
                rho[k] = rng.random_range(1.0..3.0);
                QosRow { k, rho, gamma: rng.random_range(0.5..3.0), sigma_nc2: 1.0 }
            })
            .collect();
        let gains: Vec<f64> = (0..=users).map(|_| rng.random_range(0.1..2.0)).collect();
        let got = solve_p2(&rows, &gains, 20.0, SensingStream::Included).map_err(|e| e.to_string())?;
        let mut a: Vec<Vec<f64>> = rows.iter().map(|r| r.linear_coefficients()).collect();
        a.push(vec![1.0; users + 1]);
        let mut b = vec![-1.0; users];
        b.push(20.0);
        match lp::vertex_enumeration(&gains, &a, &b, 1e-10) {
            Some((_, v)) => worst = worst.max((got.objective - v).abs() / v.abs()),
            None if got.is_optimal() => return Err("solver reports a solution to an infeasible toy".into()),
            None => {}
        }
    }
    let msg = format!("worst relative objective error {worst:.1e} on 60 toys");
    if worst <= 1e-6 { Ok(msg) } else { Err(msg) }
}

fn determinism() -> Result<String, String> {
    let config = ScenarioConfig::default();
    let table = || -> Result<Vec<u8>, String> {
        let points = run_figure("fig2", &config, 4, 99).map_err(|e| e.to_string())?;
        let mut bytes = Vec::new();
        write_csv(&points, &mut bytes).map_err(|e| e.to_string())?;
        Ok(bytes)
    };
    let (a, b) = (table()?, table()?);
    if a == b { Ok(format!("{} identical CSV bytes", a.len())) } else { Err("repeated run differs".into()) }
}

pub fn run(common: &Common) -> CliResult<u8> {
    load_config(common)?;
    let checks: [(&str, Check); 6] = [
        ("threshold anchor", threshold_anchor),
        ("chi-square kernel", chi2_kernel),
        ("voting", voting),
        ("lemmas 1 and 2", lemmas),
        ("optimizer", optimizer),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(msg) => println!("selftest {name}: ok ({msg})"),
            Err(msg) => {
                failed += 1;
                println!("selftest {name}: FAIL ({msg})");
            }
        }
    }
    println!("selftest: {}/{} passed", checks.len() - failed, checks.len());
    Ok(if failed == 0 { 0 } else { 1 })
}
