//! Acceptance suite: one pass/fail line per criterion.
//!
//! Exits 0 after reporting so that `cargo test` reflects build and test health;
//! set `IAPS_ACCEPTANCE_STRICT=1` to turn any failed criterion into a nonzero exit.
//! Numeric arguments select criteria: `cargo test --release --test acceptance -- 2 8`.

use std::time::{Duration, Instant};

use iaps_core::detect_fusion::{
    draw_symbols, fusion_threshold, glrt_statistic, simulate_observation, transmit_block,
};
use iaps_core::detect_local::{interference_cov, matched_filter, simulate_local_observation, LocalDetector};
use iaps_core::experiments::{run_figure, CurvePoint, TrialDraw};
use iaps_core::linalg::complex_normal;
use iaps_core::optimize::{algorithm1, grid_upper_bound, largest_feasible_p0, solve_p2, solve_pa, QosRow, SensingStream};
use iaps_core::precoding::sinr;
use iaps_core::rng::{substream, Purpose};
use iaps_core::scenario::ScenarioConfig;
use iaps_core::stats::{noncentral_chi2_sf_2dof, swerling1_detection_probability, threshold_from_pfa};
use iaps_core::vote::{beta, error_prob, optimal_kappa};
use iaps_oracle::{lp, tables, vote};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn report(id: usize, name: &str, start: Instant, limit: Option<Duration>, o: Outcome) -> bool {
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = o.pass && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" (limit {:.0} s)", l.as_secs_f64()));
    println!(
        "criterion {id} [{}] {name}: {}; {:.2} s{budget}",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64()
    );
    pass
}

fn chi_square_kernel() -> Outcome {
    let mut worst: f64 = 0.0;
    for (xi, rho, want) in tables::chi2_grid(50) {
        let got = noncentral_chi2_sf_2dof(xi, rho).unwrap();
        worst = worst.max((got - want).abs());
    }
    let xi = threshold_from_pfa(1e-5).unwrap();
    let anchor = (xi - 23.025850929940457).abs();
    outcome(
        worst <= 1e-9 && anchor <= 1e-10,
        format!("max |sf - quadrature| = {worst:.2e} on 50x50, threshold(1e-5) = {xi:.10}"),
    )
}

/// A feasible default-scenario trial with the IAPS allocation applied.
fn feasible_draw(config: &ScenarioConfig, seed: u64) -> (TrialDraw, Vec<f64>) {
    (0..)
        .find_map(|t| {
            let d = TrialDraw::new(config, seed, t).ok()?;
            let a = solve_p2(&d.rows, &d.gains, config.p_max_mw(), SensingStream::Included).ok()?;
            a.is_optimal().then(|| (d, a.p))
        })
        .unwrap()
}

fn within(hits: usize, trials: usize, p: f64) -> (bool, f64, f64) {
    let rate = hits as f64 / trials as f64;
    let sd = (p * (1.0 - p) / trials as f64).sqrt();
    ((rate - p).abs() <= 3.0 * sd, rate, (rate - p) / sd)
}

fn false_alarm_calibration() -> Outcome {
    let config = ScenarioConfig { pfa: 1e-2, ..ScenarioConfig::default() };
    let (draw, p) = feasible_draw(&config, 101);
    let pre = draw.powered(&p).unwrap();
    let sigma2 = config.sigma_ns2();
    let trials = 100_000;
    let receivers = draw.model.receivers();
    let fused_threshold = fusion_threshold(config.pfa, receivers).unwrap();
    let detectors: Vec<LocalDetector> = draw
        .model
        .b
        .iter()
        .enumerate()
        .map(|(r, b)| {
            let g = (r > 0).then(|| &draw.channels.g[r - 1]);
            let q = interference_cov(g, &pre.w_hat, sigma2, b.nrows());
            LocalDetector::new(r, b, q, &pre.w_hat, config.l, config.sigma_rcs2(), config.pfa).unwrap()
        })
        .collect();
    let filters: Vec<_> = detectors
        .iter()
        .zip(&draw.model.b)
        .map(|(d, b)| d.filter(&pre, b).unwrap())
        .collect();
    // Hit counts per trial: index 0 is the fused detector, 1.. the local ones.
    let hits = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(202, t, Purpose::Noise);
            let s = draw_symbols(pre.streams(), config.l, &mut rng).unwrap();
            let x = transmit_block(&pre, &s);
            let obs = simulate_observation(&draw.model, &x, None, sigma2, &mut rng).unwrap();
            let stat = 2.0 * glrt_statistic(&obs, &draw.model.known_blocks(&x), sigma2).unwrap();
            let mut h = vec![(stat >= fused_threshold) as usize];
            for (r, (det, filter)) in detectors.iter().zip(&filters).enumerate() {
                let b = &draw.model.b[r];
                let g = (r > 0).then(|| &draw.channels.g[r - 1]);
                let z = simulate_local_observation(b, g, &x, None, sigma2, &mut rng).unwrap();
                let zt = matched_filter(&z, &s).unwrap();
                h.push(det.decide(filter.statistic(&zt).unwrap()) as usize);
            }
            h
        })
        .reduce(
            || vec![0; receivers + 1],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        );
    let (fused_hits, local_hits) = (hits[0], &hits[1..]);
    let (fused_ok, fused_rate, fused_z) = within(fused_hits, trials, config.pfa);
    let mut all_ok = fused_ok;
    let mut worst_z: f64 = 0.0;
    for &h in local_hits {
        let (ok, _, z) = within(h, trials, config.pfa);
        all_ok &= ok;
        worst_z = worst_z.max(z.abs());
    }
    outcome(
        all_ok,
        format!(
            "fused rate {fused_rate:.5} (z = {fused_z:+.2}); {receivers} local detectors, worst |z| = {worst_z:.2}; 1e5 H0 trials at pfa 0.01"
        ),
    )
}

fn analytic_vs_empirical() -> Outcome {
    let config = ScenarioConfig { pfa: 1e-2, ..ScenarioConfig::default() };
    let (draw, p) = feasible_draw(&config, 303);
    let pre = draw.powered(&p).unwrap();
    let sigma2 = config.sigma_ns2();
    let receivers = draw.model.receivers();
    let threshold = fusion_threshold(config.pfa, receivers).unwrap();
    let energy: f64 = draw.model.receiver_energies(&pre.w_hat).iter().sum::<f64>() * config.l as f64;
    let trials = 10_000;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (i, rho) in [5.0, 15.0, 25.0].into_iter().enumerate() {
        // Mean of the Wilks noncentrality 2 Σ_r |α_r|² ‖B_r X‖² / σ².
        let sigma_rcs2 = rho * sigma2 / (2.0 * energy);
        let mut hits = 0;
        for t in 0..trials as u64 {
            let mut rng = substream(404 + i as u64, t, Purpose::Noise);
            let s = draw_symbols(pre.streams(), config.l, &mut rng).unwrap();
            let x = transmit_block(&pre, &s);
            let alpha: Vec<_> = (0..receivers).map(|_| complex_normal(&mut rng, sigma_rcs2)).collect();
            let obs = simulate_observation(&draw.model, &x, Some(&alpha), sigma2, &mut rng).unwrap();
            let stat = 2.0 * glrt_statistic(&obs, &draw.model.known_blocks(&x), sigma2).unwrap();
            hits += (stat >= threshold) as usize;
        }
        let empirical = hits as f64 / trials as f64;
        let analytic = swerling1_detection_probability(threshold, rho, receivers).unwrap();
        worst = worst.max((empirical - analytic).abs());
        parts.push(format!("rho {rho}: {empirical:.4} vs {analytic:.4}"));
    }
    outcome(worst <= 0.02, format!("{}; max gap {worst:.4}", parts.join(", ")))
}

fn voting() -> Outcome {
    let grid = tables::linspace(0.02, 0.97, 20);
    let mut worst: f64 = 0.0;
    let mut kappa_mismatch = 0;
    let mut kappa_checked = 0;
    for voters in [3usize, 5, 11] {
        for &pd in &grid {
            for &pfa in &grid {
                for kappa in 1..=voters {
                    let got = error_prob(kappa, pd, pfa, voters).unwrap();
                    worst = worst.max((got - vote::error_prob_enumerated(kappa, pd, pfa, voters)).abs());
                }
                if pd > pfa {
                    kappa_checked += 1;
                    let k = optimal_kappa(pd, pfa, voters).unwrap();
                    let best = vote::optimal_kappa_enumerated(pd, pfa, voters);
                    let e = |k| vote::error_prob_enumerated(k, pd, pfa, voters);
                    if k != best && e(k) > e(best) + 1e-12 {
                        kappa_mismatch += 1;
                    }
                }
            }
        }
    }
    let worked = error_prob(2, 0.9, 0.1, 3).unwrap();
    outcome(
        worst <= 1e-12 && kappa_mismatch == 0 && (worked - 0.028).abs() <= 1e-15,
        format!(
            "max |error_prob - enumeration| = {worst:.1e}; optimal kappa matched {}/{kappa_checked}; worked value {worked}",
            kappa_checked - kappa_mismatch
        ),
    )
}

fn lemma_suites() -> Outcome {
    let mut lemma1 = true;
    let mut lemma2 = true;
    for pfa in [1e-5, 1e-3, 1e-2, 0.05] {
        let grid: Vec<f64> = (0..500).map(|i| pfa + (1.0 - pfa) * (i as f64 + 0.5) / 500.0).collect();
        let b: Vec<f64> = grid.iter().map(|&pd| beta(pd, pfa).unwrap()).collect();
        lemma1 &= b.windows(2).all(|w| w[1] < w[0]);
        for voters in [3usize, 5, 11] {
            let e: Vec<f64> = grid
                .iter()
                .map(|&pd| error_prob(optimal_kappa(pd, pfa, voters).unwrap(), pd, pfa, voters).unwrap())
                .collect();
            lemma2 &= e.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        }
    }
    let config = ScenarioConfig::default();
    let p_max = config.p_max_mw();
    let (mut draws, mut pairs, mut violations) = (0, 0, 0);
    let mut t = 0;
    while draws < 100 {
        let draw = TrialDraw::new(&config, 505, t).unwrap();
        t += 1;
        let Some(top) = largest_feasible_p0(&draw.rows, p_max).unwrap() else { continue };
        draws += 1;
        let mut prev: Option<f64> = None;
        for i in 0..50 {
            let p0 = top * i as f64 / 49.0;
            let a = solve_pa(&draw.rows, p0).unwrap();
            if !a.is_optimal() {
                continue;
            }
            let pd = draw.pd_hat(&config, &a.p).unwrap();
            if let Some(q) = prev {
                pairs += 1;
                violations += (pd < q - 1e-12) as usize;
            }
            prev = Some(pd);
        }
    }
    let rate = violations as f64 / pairs.max(1) as f64;
    outcome(
        lemma1 && lemma2 && rate < 0.01,
        format!(
            "lemma 1 {}, lemma 2 {}, lemma 3 violation rate {rate:.4} over {draws} draws x 50 points",
            if lemma1 { "holds" } else { "violated" },
            if lemma2 { "holds" } else { "violated" }
        ),
    )
}

fn random_rows(rng: &mut ChaCha8Rng, users: usize) -> Vec<QosRow> {
    (1..=users)
        .map(|k| {
            let mut rho: Vec<f64> = (0..=users).map(|_| rng.random_range(0.0..0.3)).collect();
            rho[k] = rng.random_range(1.0..3.0);
            QosRow { k, rho, gamma: rng.random_range(0.5..3.0), sigma_nc2: 1.0 }
        })
        .collect()
}

fn optimizer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst_rel: f64 = 0.0;
    let mut toys = 0;
    for i in 0..300 {
        let users = 1 + i % 3;
        let rows = random_rows(&mut rng, users);
        let gains: Vec<f64> = (0..=users).map(|_| rng.random_range(0.1..2.0)).collect();
        let p_max = 20.0;
        let got = solve_p2(&rows, &gains, p_max, SensingStream::Included).unwrap();
        let mut a: Vec<Vec<f64>> = rows.iter().map(|r| r.linear_coefficients()).collect();
        a.push(vec![1.0; users + 1]);
        let mut b = vec![-1.0; rows.len()];
        b.push(p_max);
        if let Some((_, v)) = lp::vertex_enumeration(&gains, &a, &b, 1e-10) {
            worst_rel = worst_rel.max((got.objective - v).abs() / v.abs());
            toys += 1;
        } else if got.is_optimal() {
            worst_rel = f64::INFINITY;
        }
        let p0 = rng.random_range(0.0..5.0);
        let got = solve_pa(&rows, p0).unwrap();
        let a: Vec<Vec<f64>> = rows.iter().map(|r| r.linear_coefficients()[1..].to_vec()).collect();
        let b: Vec<f64> = rows.iter().map(|r| -1.0 - r.linear_coefficients()[0] * p0).collect();
        if let Some((_, v)) = lp::vertex_enumeration(&vec![-1.0; users], &a, &b, 1e-10) {
            worst_rel = worst_rel.max((got.objective + v).abs() / v.abs());
            toys += 1;
        } else if got.is_optimal() {
            worst_rel = f64::INFINITY;
        }
    }

    let config = ScenarioConfig::default();
    let (mut feasible, mut worst_gap, mut worst_replay) = (0, 0.0f64, 0.0f64);
    let gamma = config.gamma_linear();
    for t in 0..1000 {
        let draw = TrialDraw::new(&config, 607, t).unwrap();
        let a = solve_p2(&draw.rows, &draw.gains, config.p_max_mw(), SensingStream::Included).unwrap();
        if !a.is_optimal() {
            continue;
        }
        feasible += 1;
        worst_gap = worst_gap.max(a.gap);
        let pre = draw.powered(&a.p).unwrap();
        for k in 1..=config.k {
            let s = sinr(&draw.channels.h, &pre, k, config.sigma_nc2_mw()).unwrap();
            worst_replay = worst_replay.max((gamma - s) / gamma);
        }
        worst_replay = worst_replay.max((a.total_power() - config.p_max_mw()) / config.p_max_mw());
    }
    outcome(
        worst_rel <= 1e-3 && worst_gap <= 1e-6 && worst_replay <= 1e-6,
        format!(
            "{toys} toy LPs, worst relative objective error {worst_rel:.1e}; {feasible}/1000 scenario draws feasible, worst gap {worst_gap:.1e}, worst SINR/budget shortfall {worst_replay:.1e}"
        ),
    )
}

fn algorithm1_gap() -> Outcome {
    let config = ScenarioConfig::default();
    let p_max = config.p_max_mw();
    let (mut draws, mut fails, mut t) = (0, 0, 0);
    let mut mean_gap = 0.0;
    while draws < 100 {
        let draw = TrialDraw::new(&config, 707, t).unwrap();
        t += 1;
        let heuristic = algorithm1(&draw.rows, p_max, config.delta_p_frac).unwrap();
        if !heuristic.allocation.is_optimal() {
            continue;
        }
        let bound = grid_upper_bound(&draw.rows, p_max, 201, |p| draw.pd_hat(&config, p)).unwrap().unwrap();
        draws += 1;
        let value = draw.pd_hat(&config, &heuristic.allocation.p).unwrap();
        let back = solve_pa(&draw.rows, (bound.p0 - heuristic.step).max(0.0)).unwrap();
        let one_step = bound.value - draw.pd_hat(&config, &back.p).unwrap();
        if value < bound.value - one_step.max(0.0) - 1e-12 {
            fails += 1;
        }
        mean_gap += (bound.value - value) / 100.0;
    }
    outcome(fails == 0, format!("{} of {draws} draws within one step of the grid bound; mean gap {mean_gap:.2e}", draws - fails))
}

fn series<'a>(points: &'a [CurvePoint], scheme: &str, regime: &str) -> Vec<&'a CurvePoint> {
    points.iter().filter(|p| p.scheme == scheme && p.regime == regime).collect()
}

fn nondecreasing(s: &[&CurvePoint]) -> bool {
    s.windows(2).all(|w| w[1].mean >= w[0].mean - 2.0 * (w[0].stderr + w[1].stderr) - 1e-12)
}

fn dominates(hi: &[&CurvePoint], lo: &[&CurvePoint]) -> bool {
    hi.iter().zip(lo).all(|(a, b)| a.mean >= b.mean - 2.0 * (a.stderr + b.stderr) - 1e-12)
}

fn figure_trends() -> Outcome {
    let config = ScenarioConfig::default();
    let trials = 200;
    let seed = config.seed;
    let fig6 = run_figure("fig6", &config, trials, seed).unwrap();
    let fig7 = run_figure("fig7", &config, trials, seed).unwrap();
    let fig8 = run_figure("fig8", &config, trials, seed).unwrap();
    let fig10 = run_figure("fig10", &config, trials, seed).unwrap();
    let fig11 = run_figure("fig11", &config, trials, seed).unwrap();
    let u = "unlimited";

    let iaps6 = series(&fig6, "iaps", u);
    let monotone6 = ["iaps", "iaps-wo-s0", "active", "active-wo-s0", "passive", "passive-wo-s0", "min-ptotal"]
        .iter()
        .all(|s| nondecreasing(&series(&fig6, s, u)));
    let top = iaps6.last().map_or(0.0, |p| p.mean);
    let ordering = [&fig6, &fig7].iter().all(|f| {
        let i = series(f, "iaps", u);
        dominates(&i, &series(f, "active", u)) && dominates(&i, &series(f, "passive", u))
    });
    let regimes = ["iaps", "active", "passive"]
        .iter()
        .all(|s| dominates(&series(&fig10, s, u), &series(&fig10, s, "limited")));
    let monotone8 = nondecreasing(&series(&fig8, "iaps", u));
    let flat = series(&fig11, "iaps@-20dB", "limited");
    let lo = flat.iter().map(|p| p.mean).fold(f64::INFINITY, f64::min);
    let hi = flat.iter().map(|p| p.mean).fold(f64::NEG_INFINITY, f64::max);
    let near_flat = hi - lo <= 0.05;

    let checks = [
        ("fig6 monotone", monotone6),
        ("fig6 iaps >= 0.99 at -16 dB", top >= 0.99),
        ("iaps >= active/passive", ordering),
        ("unlimited >= limited", regimes),
        ("fig8 monotone in R", monotone8),
        ("fig11 flat at -20 dB", near_flat),
    ];
    let summary: Vec<String> = checks
        .iter()
        .map(|(n, ok)| format!("{n} {}", if *ok { "ok" } else { "FAILED" }))
        .collect();
    outcome(
        checks.iter().all(|c| c.1),
        format!(
            "{}; iaps at -16 dB = {top:.4}; fig11 -20 dB spread = {:.3} ({lo:.3}..{hi:.3})",
            summary.join(", "),
            hi - lo
        ),
    )
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let suite = Instant::now();
    let mut results = Vec::new();
    let criteria: [(&str, Option<u64>, fn() -> Outcome); 8] = [
        ("chi-square kernel", Some(5), chi_square_kernel),
        ("false-alarm calibration", Some(120), false_alarm_calibration),
        ("analytic vs empirical P_D", None, analytic_vs_empirical),
        ("voting", None, voting),
        ("lemma suites", None, lemma_suites),
        ("optimizer", None, optimizer),
        ("algorithm 1 gap", None, algorithm1_gap),
        ("figure trends", None, figure_trends),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        results.push(report(i + 1, name, start, limit.map(Duration::from_secs), o));
    }
    let total = suite.elapsed();
    let passed = results.iter().filter(|&&p| p).count();
    let in_time = total <= Duration::from_secs(600);
    println!(
        "acceptance: {passed}/{} criteria passed in {:.1} s (suite limit 600 s{})",
        results.len(),
        total.as_secs_f64(),
        if in_time { "" } else { ", EXCEEDED" }
    );
    let strict = std::env::var("IAPS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && (passed < results.len() || !in_time) {
        std::process::exit(1);
    }
}
