//! wasm-bindgen entry points for the static demo page in `www/`.

use pairclust::analysis::{ergodic_se_ppp_lower, rate_coverage_approx, rate_coverage_exact, FixedGeometry};
use pairclust::channel::ScenarioParams;
use pairclust::geometry::estimate_region_areas;
use pairclust::graphcolor::build_cluster_plan;
use pairclust::topology::generate_perturbed_grid;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct PlanView {
    pub bs: Vec<[f64; 2]>,
    pub window: [f64; 4],
    /// `[i, j, pattern]` for every kept edge.
    pub edges: Vec<[usize; 3]>,
    pub cut: Vec<[usize; 2]>,
    pub l: usize,
    pub delta: usize,
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Perturbed grid, cut and colored; serialized as JSON.
pub fn plan_view(rows: usize, cols: usize, cell_size: f64, p: f64, seed: u64, delta_ec: usize) -> pairclust::Result<PlanView> {
    let t = generate_perturbed_grid(rows, cols, cell_size, p, seed)?;
    let areas = estimate_region_areas(&t, 5000, seed)?;
    let plan = build_cluster_plan(&t, &areas, delta_ec)?;
    Ok(PlanView {
        bs: t.bs_positions.iter().map(|q| [q.x, q.y]).collect(),
        window: [t.window.x_min, t.window.y_min, t.window.x_max, t.window.y_max],
        edges: plan
            .coloring
            .color
            .iter()
            .map(|(&(a, b), &c)| [a, b, c])
            .collect(),
        cut: plan.cut_regions.iter().map(|k| [k.pair().0, k.pair().1]).collect(),
        l: plan.l,
        delta: plan.delta(),
    })
}

#[wasm_bindgen]
pub fn plan_grid(rows: usize, cols: usize, cell_size: f64, p: f64, seed: u64, delta_ec: usize) -> Result<String, JsError> {
    let view = plan_view(rows, cols, cell_size, p, seed, delta_ec).map_err(js_err)?;
    serde_json::to_string(&view).map_err(js_err)
}

/// Exact and approximate coverage over `gammas`, concatenated.
#[wasm_bindgen]
pub fn coverage_curves(n: usize, k: usize, beta: f64, ratios: Vec<f64>, gammas: Vec<f64>) -> Result<Vec<f64>, JsError> {
    let geom = FixedGeometry::new(1.0, ratios).map_err(js_err)?;
    let base = ScenarioParams {
        n,
        k,
        beta,
        snr_db: None,
        ..ScenarioParams::default()
    };
    base.validate().map_err(js_err)?;
    let mut exact = Vec::with_capacity(gammas.len());
    let mut approx = Vec::with_capacity(gammas.len());
    for &g in &gammas {
        let p = ScenarioParams { gamma: g, ..base.clone() };
        exact.push(rate_coverage_exact(&geom, &p).map_err(js_err)?);
        approx.push(rate_coverage_approx(&geom, &p).map_err(js_err)?);
    }
    exact.extend(approx);
    Ok(exact)
}

#[wasm_bindgen]
pub fn ppp_bound(n: usize, k: usize, l: usize, beta: f64) -> Result<f64, JsError> {
    ergodic_se_ppp_lower(n, k, l, beta).map_err(js_err)
}
