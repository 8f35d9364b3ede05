//! Browser bindings for the demo page in `www/`.
//!
//! Each export returns a JSON string. The JSON builders are plain Rust
//! functions so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use cusum_sentinel::attacks::{AttackSpec, CONSTANT};
use cusum_sentinel::grid::{ieee14, LinearTrajectory, LoadRamp};
use cusum_sentinel::rgcusum::zeta;
use cusum_sentinel::sim::Simulator;
use cusum_sentinel::{AttackBounds, BoundsReport, LinearModel};

/// Largest number of Monte Carlo runs or curve points accepted from the page.
pub const MAX_RUNS: usize = 2000;
pub const MAX_POINTS: usize = 4000;

#[derive(Serialize)]
struct ZetaCurve {
    x: Vec<f64>,
    zeta: Vec<f64>,
    /// Breakpoints `±ρ_L`, `±ρ_U` for drawing guides.
    breakpoints: [f64; 4],
}

/// Samples `ζ(x̃)` on `points` evenly spaced values of `[x_min, x_max]`.
pub fn zeta_curve_json(
    rho_l: f64,
    rho_u: f64,
    sigma2: f64,
    x_min: f64,
    x_max: f64,
    points: usize,
) -> Result<String, String> {
    let bounds = AttackBounds::new(rho_l, rho_u).map_err(|e| e.to_string())?;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(format!("σ² must be positive, got {sigma2}"));
    }
    if x_min.partial_cmp(&x_max) != Some(std::cmp::Ordering::Less) || !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("need x_min < x_max and 2..={MAX_POINTS} points"));
    }
    let step = (x_max - x_min) / (points - 1) as f64;
    let x: Vec<f64> = (0..points).map(|i| x_min + step * i as f64).collect();
    let zeta = x.iter().map(|&v| zeta(v, &bounds, sigma2)).collect();
    let curve = ZetaCurve { x, zeta, breakpoints: [-rho_u, -rho_l, rho_l, rho_u] };
    Ok(serde_json::to_string(&curve).expect("curve serializes"))
}

fn fixture_model(sigma2: f64) -> Result<LinearModel, String> {
    let (case, placement) = ieee14();
    case.model(&placement, sigma2).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct FixtureBounds {
    meters: usize,
    states: usize,
    row_norms: Vec<f64>,
    #[serde(flatten)]
    report: BoundsReport,
}

/// Threshold floor, delay ceiling and per-meter bounds on the bundled
/// 14-bus fixture.
pub fn fixture_bounds_json(sigma2: f64, rho_l: f64, rho_u: f64, gamma: f64) -> Result<String, String> {
    let model = fixture_model(sigma2)?;
    let bounds = AttackBounds::new(rho_l, rho_u).map_err(|e| e.to_string())?;
    let proj = model.projector();
    let report = BoundsReport::compute(&proj, &bounds, sigma2, gamma, None).map_err(|e| e.to_string())?;
    let out = FixtureBounds {
        meters: model.num_meters(),
        states: model.num_params(),
        row_norms: proj.row_norms().to_vec(),
        report,
    };
    Ok(serde_json::to_string(&out).expect("bounds serialize"))
}

#[derive(Serialize)]
struct Sweep {
    warnings: Vec<String>,
    rows: Vec<cusum_sentinel::sim::CurveRow>,
}

/// ARL and detection delay on a geometric threshold grid for the fixture
/// under the bundled constant attack (scaled by `attack_scale` and projected
/// onto the residual space), with the load ramps of the fixture scenario.
#[allow(clippy::too_many_arguments)]
pub fn fixture_sweep_json(
    sigma2: f64,
    rho_l: f64,
    rho_u: f64,
    attack_scale: f64,
    h_min: f64,
    h_max: f64,
    points: usize,
    runs: usize,
    seed: u64,
) -> Result<String, String> {
    if !(h_min > 0.0 && h_min <= h_max && h_max.is_finite()) || !(1..=50).contains(&points) {
        return Err("need 0 < h_min ≤ h_max and 1..=50 grid points".into());
    }
    if !(1..=MAX_RUNS).contains(&runs) {
        return Err(format!("runs must be in 1..={MAX_RUNS}"));
    }
    let (case, placement) = ieee14();
    let model = case.model(&placement, sigma2).map_err(|e| e.to_string())?;
    let bounds = AttackBounds::new(rho_l, rho_u).map_err(|e| e.to_string())?;
    let mut spec = AttackSpec::constant(CONSTANT.iter().map(|v| v * attack_scale).collect());
    spec.project_to_complement = true;
    let (schedule, warnings) = spec.compile(&model.projector(), &bounds).map_err(|e| e.to_string())?;
    let ramps = [
        LoadRamp { bus: 3, watts_per_step: -100.0 },
        LoadRamp { bus: 5, watts_per_step: 100.0 },
        LoadRamp { bus: 11, watts_per_step: 100.0 },
    ];
    let trajectory = LinearTrajectory::new(&case, &ramps).map_err(|e| e.to_string())?;
    let sim = Simulator::new(model, trajectory, schedule, bounds).map_err(|e| e.to_string())?;
    let ratio = if points > 1 { (h_max / h_min).powf(1.0 / (points - 1) as f64) } else { 1.0 };
    let hs: Vec<f64> =
        (0..points).map(|i| if i + 1 == points { h_max } else { h_min * ratio.powi(i as i32) }).collect();
    let horizon = sim.default_horizon(h_max);
    let rows = sim.curve_sweep(&hs, horizon, horizon, seed, runs).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&Sweep { warnings, rows }).expect("sweep serializes"))
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn zeta_curve(
    rho_l: f64,
    rho_u: f64,
    sigma2: f64,
    x_min: f64,
    x_max: f64,
    points: usize,
) -> Result<String, JsError> {
    js(zeta_curve_json(rho_l, rho_u, sigma2, x_min, x_max, points))
}

#[wasm_bindgen]
pub fn fixture_bounds(sigma2: f64, rho_l: f64, rho_u: f64, gamma: f64) -> Result<String, JsError> {
    js(fixture_bounds_json(sigma2, rho_l, rho_u, gamma))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn fixture_sweep(
    sigma2: f64,
    rho_l: f64,
    rho_u: f64,
    attack_scale: f64,
    h_min: f64,
    h_max: f64,
    points: usize,
    runs: usize,
    seed: u32,
) -> Result<String, JsError> {
    js(fixture_sweep_json(sigma2, rho_l, rho_u, attack_scale, h_min, h_max, points, runs, u64::from(seed)))
}
