mod common;

use common::*;
use iaps_core::detect_fusion::{noncentrality_fusion, ReceiverSet};
use iaps_core::detect_local::{interference_cov, noncentrality_local, LocalDetector};
use iaps_core::experiments::trial::TrialDraw;
use iaps_core::linalg::{is_hermitian, min_eigenvalue, trace_re, CMatrix, C64};
use iaps_core::optimize::{algorithm1, largest_feasible_p0, solve_p2, SensingStream};
use iaps_core::precoding::{rzf, sinr, zfr, PrecoderSet};
use iaps_core::rng::{substream, Purpose};
use iaps_core::scenario::{generate_layout, steering, FusionNormalization, ScenarioConfig, ZfrMode};
use iaps_core::stats::{chi2_cdf_2dof, noncentral_chi2_sf_2dof, threshold_from_pfa};
use iaps_core::vote::{beta, error_prob, optimal_kappa};
use iaps_oracle::vote::error_prob_enumerated;
use proptest::prelude::*;

fn small_config() -> ScenarioConfig {
    ScenarioConfig { m: 6, n0: 8, n1: 5, k: 3, r: 3, l: 10, ..ScenarioConfig::default() }
}

proptest! {
    #[test]
    fn steering_has_unit_modulus_entries(angle in -3.2f64..3.2, n in 1usize..40, delta in 0.05f64..2.0) {
        let v = steering(angle, n, delta);
        prop_assert!((v.norm_squared() - n as f64).abs() < 1e-10);
        prop_assert!((v[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        for z in v.iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn layout_geometry(seed in any::<u64>(), r in 1usize..12) {
        let cfg = ScenarioConfig { r, ..ScenarioConfig::default() };
        let layout = generate_layout(&cfg, &mut substream(seed, 0, Purpose::Layout));
        for p in layout.rap_pos.iter().chain(&layout.ue_pos).chain([&layout.bs_pos]) {
            prop_assert!((0.0..=cfg.region_m).contains(&p.x) && (0.0..=cfg.region_m).contains(&p.y));
        }
        for a in layout.phi.iter().chain([&layout.theta]) {
            prop_assert!(*a > -std::f64::consts::PI && *a <= std::f64::consts::PI);
        }
        let dx = layout.target_pos.x - layout.bs_pos.x;
        let dy = layout.target_pos.y - layout.bs_pos.y;
        prop_assert!((layout.theta.sin() * dx - layout.theta.cos() * dy).abs() < 1e-9 * (dx.abs() + dy.abs()));
    }

    #[test]
    fn chi2_tail_is_monotone(xi in 0.0f64..50.0, rho in 0.0f64..50.0, dx in 0.0f64..5.0, dr in 0.0f64..5.0) {
        let base = noncentral_chi2_sf_2dof(xi, rho).unwrap();
        prop_assert!(noncentral_chi2_sf_2dof(xi, rho + dr).unwrap() >= base - 1e-15);
        prop_assert!(noncentral_chi2_sf_2dof(xi + dx, rho).unwrap() <= base + 1e-15);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn detection_probability_is_at_least_pfa(pfa in 1e-8f64..0.5, rho in 0.0f64..60.0) {
        let xi = threshold_from_pfa(pfa).unwrap();
        let pd = noncentral_chi2_sf_2dof(xi, rho).unwrap();
        prop_assert!(pd >= pfa * (1.0 - 1e-9) && pd <= 1.0);
    }

    #[test]
    fn threshold_inverts_central_cdf(pfa in 1e-12f64..0.999) {
        let xi = threshold_from_pfa(pfa).unwrap();
        prop_assert!((1.0 - chi2_cdf_2dof(xi) - pfa).abs() <= 1e-14_f64.max(pfa * 1e-12));
    }

    #[test]
    fn voting_error_matches_enumeration(voters in 1usize..=12, pd in 0.0f64..=1.0, pfa in 0.0f64..=1.0, k in 0usize..12) {
        let kappa = 1 + k % voters;
        let got = error_prob(kappa, pd, pfa, voters).unwrap();
        prop_assert!((got - error_prob_enumerated(kappa, pd, pfa, voters)).abs() < 1e-12);
    }

    #[test]
    fn p2_is_invariant_to_gain_scaling(seed in any::<u64>(), users in 1usize..5, s in 0.01f64..100.0) {
        let mut r = rng(seed);
        let rows = random_rows(&mut r, users, 1.5);
        let gains: Vec<f64> = (0..=users).map(|_| rand::Rng::random_range(&mut r, 0.1..2.0)).collect();
        let scaled: Vec<f64> = gains.iter().map(|g| g * s).collect();
        let a = solve_p2(&rows, &gains, 30.0, SensingStream::Included).unwrap();
        let b = solve_p2(&rows, &scaled, 30.0, SensingStream::Included).unwrap();
        prop_assert_eq!(a.is_optimal(), b.is_optimal());
        if a.is_optimal() {
            prop_assert!((a.objective * s - b.objective).abs() <= 1e-8 * b.objective.abs());
        }
    }

    #[test]
    fn optimal_allocations_replay_feasible(seed in any::<u64>(), users in 1usize..8, gamma in 0.2f64..4.0) {
        let mut r = rng(seed);
        let rows = random_rows(&mut r, users, gamma);
        let gains: Vec<f64> = (0..=users).map(|_| rand::Rng::random_range(&mut r, 0.0..2.0)).collect();
        let p_max = 40.0;
        let res = solve_p2(&rows, &gains, p_max, SensingStream::Included).unwrap();
        if res.is_optimal() {
            prop_assert!(res.gap <= 1e-6);
            prop_assert!(res.total_power() <= p_max * (1.0 + 1e-9));
            for row in &rows {
                prop_assert!(row.slack(&res.p) >= -1e-8);
                let interference: f64 = row.rho.iter().zip(&res.p).enumerate()
                    .filter(|(j, _)| *j != row.k).map(|(_, (g, p))| g * g * p).sum();
                let sinr = row.own_gain().powi(2) * res.p[row.k] / (interference + row.sigma_nc2);
                prop_assert!(sinr >= row.gamma * (1.0 - 1e-6));
            }
        }
    }

    #[test]
    fn algorithm1_lands_within_one_step(seed in any::<u64>(), users in 1usize..5, frac in 0.005f64..0.2) {
        let rows = random_rows(&mut rng(seed), users, 1.5);
        let p_max = 30.0;
        let res = algorithm1(&rows, p_max, frac).unwrap();
        let best = largest_feasible_p0(&rows, p_max).unwrap();
        prop_assert_eq!(res.allocation.is_optimal(), best.is_some());
        if let Some(p0) = best {
            let got = res.allocation.p[0];
            prop_assert!(got <= p0 * (1.0 + 1e-9) + 1e-9);
            prop_assert!(p0 - got <= res.step * (1.0 + 1e-9));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn precoder_invariants(seed in any::<u64>()) {
        let cfg = small_config();
        let draw = TrialDraw::new(&cfg, seed, 0).unwrap();
        let pre = draw.powered(&[0.4, 1.0, 2.0, 0.5]).unwrap();
        for w in &pre.w_tilde {
            prop_assert!((w.norm() - 1.0).abs() < 1e-12);
        }
        prop_assert!(is_hermitian(&pre.w_hat, 1e-12));
        prop_assert!(min_eigenvalue(&pre.w_hat) > -1e-12);
        prop_assert!((trace_re(&pre.w_hat) - 3.9).abs() < 1e-9 * 3.9);
    }

    #[test]
    fn zfr_keeps_sinr_independent_of_sensing_power(seed in any::<u64>(), p0 in 0.0f64..50.0) {
        let h = random_matrix(6, 3, seed);
        let a = steering(0.3, 6, 0.5);
        let mut dirs = vec![zfr(&h, &a, ZfrMode::Projection).unwrap()];
        dirs.extend(rzf(&h, 0.1).unwrap());
        let base = PrecoderSet::new(dirs.clone(), vec![0.0, 1.0, 1.5, 0.7]).unwrap();
        let more = PrecoderSet::new(dirs, vec![p0, 1.0, 1.5, 0.7]).unwrap();
        for k in 1..=3 {
            let g0 = sinr(&h, &base, k, 0.1).unwrap();
            let g1 = sinr(&h, &more, k, 0.1).unwrap();
            prop_assert!((g0 - g1).abs() <= 1e-9 * g0);
        }
    }

    #[test]
    fn sinr_grows_with_own_power(seed in any::<u64>(), extra in 0.0f64..10.0) {
        let h = random_matrix(6, 3, seed);
        let dirs = {
            let mut d = vec![zfr(&h, &steering(0.3, 6, 0.5), ZfrMode::Projection).unwrap()];
            d.extend(rzf(&h, 0.1).unwrap());
            d
        };
        let low = PrecoderSet::new(dirs.clone(), vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let high = PrecoderSet::new(dirs, vec![1.0, 1.0 + extra, 1.0, 1.0]).unwrap();
        let a = sinr(&h, &low, 1, 0.2).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!(sinr(&h, &high, 1, 0.2).unwrap() >= a);
    }

    #[test]
    fn fusion_noncentrality_splits_into_active_and_passive(seed in any::<u64>()) {
        let cfg = small_config();
        let draw = TrialDraw::new(&cfg, seed, 1).unwrap();
        let pre = draw.powered(&[1.0, 0.2, 0.3, 0.4]).unwrap();
        let rho = |set| noncentrality_fusion(&draw.model, &pre.w_hat, cfg.l, 0.01, 2.0, FusionNormalization::PerReceiver, set);
        let total = rho(ReceiverSet::All);
        prop_assert!((total - rho(ReceiverSet::Active) - rho(ReceiverSet::Passive)).abs() <= 1e-12 * total);
        let a = &draw.channels.a_theta;
        let beam = (a.adjoint() * &pre.w_hat * a)[(0, 0)].re;
        for (r, b) in draw.model.b.iter().enumerate() {
            let e = trace_re(&(b * &pre.w_hat * b.adjoint()));
            let n = if r == 0 { cfg.n0 } else { cfg.n1 } as f64;
            prop_assert!((e - n * beam).abs() <= 1e-10 * e.max(1.0));
        }
    }

    #[test]
    fn whitening_and_interference_monotonicity(seed in any::<u64>(), s in 1.0f64..5.0) {
        let g = random_matrix(5, 4, seed);
        let w = random_matrix(4, 3, seed ^ 0x55);
        let w_hat = &w * w.adjoint();
        let b = steering(0.2, 5, 0.5) * steering(0.9, 4, 0.5).adjoint();
        let q = interference_cov(Some(&g), &w_hat, 0.5, 5);
        prop_assert!(min_eigenvalue(&q) >= 0.5 - 1e-12);
        let det = LocalDetector::new(1, &b, q.clone(), &w_hat, 10, 0.1, 1e-3).unwrap();
        let white = det.u.adjoint() * &q * &det.u;
        prop_assert!((white - CMatrix::identity(5, 5)).camax() < 1e-10);
        let scaled = g.map(|z| z * s);
        let q2 = interference_cov(Some(&scaled), &w_hat, 0.5, 5);
        let r1 = noncentrality_local(&b, &w_hat, &q, 10, 0.1).unwrap();
        let r2 = noncentrality_local(&b, &w_hat, &q2, 10, 0.1).unwrap();
        prop_assert!(r2 <= r1 * (1.0 + 1e-12));
    }
}

#[test]
fn lemma1_beta_strictly_decreasing() {
    for pfa in [1e-5, 1e-3, 1e-2, 0.05] {
        let grid: Vec<f64> = (0..500).map(|i| pfa + (1.0 - pfa) * (i as f64 + 0.5) / 500.0).collect();
        let b: Vec<f64> = grid.iter().map(|&pd| beta(pd, pfa).unwrap()).collect();
        assert!(b.windows(2).all(|w| w[1] < w[0]), "pfa = {pfa}");
    }
}

#[test]
fn lemma2_optimal_error_nonincreasing() {
    for pfa in [1e-5, 1e-3, 1e-2, 0.05] {
        for voters in [3usize, 5, 11] {
            let mut prev = f64::INFINITY;
            for i in 0..500 {
                let pd = pfa + (1.0 - pfa) * (i as f64 + 0.5) / 500.0;
                let e = error_prob(optimal_kappa(pd, pfa, voters).unwrap(), pd, pfa, voters).unwrap();
                assert!(e <= prev + 1e-12, "pfa={pfa} voters={voters} pd={pd}");
                prev = e;
            }
        }
    }
}

#[test]
fn objective_favors_sensing_stream() {
    let cfg = ScenarioConfig::default();
    let draws = 1000;
    let hits = (0..draws)
        .filter(|&t| {
            let d = TrialDraw::new(&cfg, 77, t).unwrap();
            d.gains[0] >= d.gains.iter().copied().fold(0.0, f64::max)
        })
        .count();
    println!("sensing stream has the largest gain in {hits}/{draws} draws");
    assert!(hits as f64 >= 0.95 * draws as f64, "{hits}/{draws}");
}
