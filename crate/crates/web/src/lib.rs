//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string. The `*_json`
//! functions hold the logic and run natively too.

use kgfa_core::analytics::{access_probability, approx_access_probability, Engine, EvalOptions, ModelSize};
use kgfa_core::decoder::decode_stf;
use kgfa_core::model::{generate_access_map, rbs_for_gamma, SystemConfig};
use kgfa_core::montecarlo::estimate_access_probability;
use kgfa_core::{Error, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Points above this are refused to keep the page responsive.
const MAX_CURVE_POINTS: u32 = 200;
const MAX_SIM_WORK: u64 = 20_000_000;

#[derive(Serialize)]
struct CurvePoint {
    gamma: f64,
    rbs: u32,
    /// Finite model, absent where its cost exceeds the budget.
    analytic: Option<f64>,
    approx: f64,
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Parameter(e.to_string()))
}

/// Access probability against load for `N` MTCDs.
pub fn probability_curve_json(mtcds: u32, repetition: u32, frames: u32, gamma_max: f64, points: u32) -> Result<String> {
    if !(2..=MAX_CURVE_POINTS).contains(&points) {
        return Err(Error::Parameter(format!("points must be in 2..={MAX_CURVE_POINTS}")));
    }
    if gamma_max.is_nan() || gamma_max <= 0.0 {
        return Err(Error::Parameter("gamma_max must be positive".into()));
    }
    let float = EvalOptions {
        term_budget: 2_000_000,
        ..EvalOptions::with_engine(Engine::Float)
    };
    let mut out = Vec::with_capacity(points as usize);
    for i in 1..=points {
        let gamma = gamma_max * i as f64 / points as f64;
        let rbs = rbs_for_gamma(mtcds, gamma)?;
        if rbs < repetition {
            continue;
        }
        let size = ModelSize::new(rbs, mtcds, repetition, frames);
        let analytic = match access_probability(size, &float) {
            Ok(p) => Some(p.total.to_f64()),
            Err(Error::Budget(_)) => None,
            Err(e) => return Err(e),
        };
        let approx = approx_access_probability(size.gamma(), repetition, frames, &float)?
            .total
            .to_f64();
        out.push(CurvePoint {
            gamma: size.gamma(),
            rbs,
            analytic,
            approx,
        });
    }
    to_json(&out)
}

#[derive(Serialize)]
struct GridView {
    frames: u32,
    rbs: u32,
    /// Per cell, frame-major: the 0-based MTCD ids of its replicas.
    cells: Vec<Vec<u32>>,
    recovery_iteration: Vec<Option<u32>>,
    recovered: usize,
}

/// Draws one access map and decodes it.
#[allow(clippy::too_many_arguments)]
pub fn decode_grid_json(
    rbs: u32,
    mtcds: u32,
    repetition: u32,
    frames: u32,
    iterations: u32,
    mai_width: u32,
    seed: u64,
) -> Result<String> {
    if (rbs as u64) * (frames as u64) > 4096 {
        return Err(Error::Parameter("grid too large to draw".into()));
    }
    let cfg = SystemConfig::new(rbs, mtcds, repetition, frames).with_iic(iterations, mai_width);
    let map = generate_access_map(&cfg, seed)?;
    let out = decode_stf(&map);
    let view = GridView {
        frames,
        rbs,
        cells: (0..map.cell_count())
            .map(|c| map.cell(c).iter().map(|r| r.mtcd).collect())
            .collect(),
        recovered: out.recovered_count(),
        recovery_iteration: out.recovery_iteration,
    };
    to_json(&view)
}

/// Monte Carlo access probability with its 95% interval.
pub fn quick_simulation_json(
    rbs: u32,
    mtcds: u32,
    repetition: u32,
    frames: u32,
    trials: u32,
    seed: u64,
) -> Result<String> {
    let work = trials as u64 * mtcds as u64 * repetition as u64 * frames as u64;
    if work > MAX_SIM_WORK {
        return Err(Error::Budget(format!(
            "{work} placements exceed the demo limit of {MAX_SIM_WORK}"
        )));
    }
    let cfg = SystemConfig::new(rbs, mtcds, repetition, frames);
    let report = estimate_access_probability(&cfg, trials as u64, seed)?;
    to_json(&report)
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = probabilityCurve)]
pub fn probability_curve(
    mtcds: u32,
    repetition: u32,
    frames: u32,
    gamma_max: f64,
    points: u32,
) -> std::result::Result<String, JsError> {
    js(probability_curve_json(mtcds, repetition, frames, gamma_max, points))
}

#[wasm_bindgen(js_name = decodeGrid)]
pub fn decode_grid(
    rbs: u32,
    mtcds: u32,
    repetition: u32,
    frames: u32,
    iterations: u32,
    mai_width: u32,
    seed: u32,
) -> std::result::Result<String, JsError> {
    js(decode_grid_json(
        rbs,
        mtcds,
        repetition,
        frames,
        iterations,
        mai_width,
        seed as u64,
    ))
}

#[wasm_bindgen(js_name = quickSimulation)]
pub fn quick_simulation(
    rbs: u32,
    mtcds: u32,
    repetition: u32,
    frames: u32,
    trials: u32,
    seed: u32,
) -> std::result::Result<String, JsError> {
    js(quick_simulation_json(
        rbs,
        mtcds,
        repetition,
        frames,
        trials,
        seed as u64,
    ))
}
