//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export also works as a plain Rust function, so the crate builds and
//! tests on the host target.

use iaps_core::detect_fusion::analytic_pd_fusion;
use iaps_core::experiments::plot::layout_svg;
use iaps_core::experiments::{Regime, Scheme, TrialDraw};
use iaps_core::optimize::{solve_p2, SensingStream};
use iaps_core::scenario::ScenarioConfig;
use iaps_core::vote::{error_prob, optimal_kappa_or_limit};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Analytic detection probability at `points` noncentralities evenly spaced on `[0, rho_max]`.
#[wasm_bindgen]
pub fn detection_curve(pfa: f64, rho_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 || !(rho_max > 0.0) {
        return Err("need at least two points and a positive rho_max".into());
    }
    (0..points)
        .map(|i| analytic_pd_fusion(rho_max * i as f64 / (points - 1) as f64, pfa).map_err(|e| e.to_string()))
        .collect()
}

/// Fusion error probability for every vote threshold `κ = 1..=voters`.
#[wasm_bindgen]
pub fn voting_errors(pd: f64, pfa: f64, voters: usize) -> Result<Vec<f64>, String> {
    (1..=voters)
        .map(|k| error_prob(k, pd, pfa, voters).map_err(|e| e.to_string()))
        .collect()
}

#[wasm_bindgen]
pub fn optimal_vote_threshold(pd: f64, pfa: f64, voters: usize) -> Result<usize, String> {
    optimal_kappa_or_limit(pd, pfa, voters).map_err(|e| e.to_string())
}

/// Draws one deployment, allocates power and reports the resulting detection
/// probabilities as JSON, including an SVG of the layout.
#[wasm_bindgen]
pub fn scenario_allocation(seed: u64, rap_count: usize, ue_count: usize, p_max_dbm: f64, gamma_db: f64, sigma_rcs_db: f64) -> Result<String, String> {
    let config = ScenarioConfig {
        r: rap_count,
        k: ue_count,
        p_max_dbm,
        gamma_db,
        sigma_rcs_db,
        seed,
        ..ScenarioConfig::default()
    };
    config.validate().map_err(|e| e.to_string())?;
    let draw = TrialDraw::new(&config, seed, 0).map_err(|e| e.to_string())?;
    let svg = layout_svg(&draw.layout, config.region_m);
    let alloc = solve_p2(&draw.rows, &draw.gains, config.p_max_mw(), SensingStream::Included).map_err(|e| e.to_string())?;
    if !alloc.is_optimal() {
        return Ok(json!({ "feasible": false, "svg": svg }).to_string());
    }
    let mut pd = serde_json::Map::new();
    for scheme in [Scheme::Iaps, Scheme::Active, Scheme::Passive] {
        for regime in [Regime::Unlimited, Regime::Limited] {
            let v = draw
                .detection_probability(&config, &alloc.p, scheme, regime)
                .map_err(|e| e.to_string())?;
            pd.insert(format!("{}/{}", scheme.label(), regime.label()), json!(v));
        }
    }
    Ok(json!({
        "feasible": true,
        "p_mw": alloc.p,
        "total_mw": alloc.p.iter().sum::<f64>(),
        "pd": pd,
        "svg": svg,
    })
    .to_string())
}
