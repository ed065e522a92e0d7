//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each export has a plain Rust twin so the logic is tested natively;
//! the wrappers only turn errors into JavaScript exceptions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use dragkit::metrics::simulate;
use dragkit::model::{duffing_ladder, LadderParams};
use dragkit::synthesis::{synthesize, tmin_numeric, Family, Recipe};
use wasm_bindgen::prelude::*;

const LEVELS: usize = 4;

fn setup(family: &str, delta2_ghz: f64) -> Result<(Family, LadderParams), String> {
    let family: Family = family.parse().map_err(|e: dragkit::Error| e.to_string())?;
    if !(delta2_ghz < 0.0) {
        return Err("anharmonicity must be negative".into());
    }
    let params = duffing_ladder(2.0 * std::f64::consts::PI * delta2_ghz, LEVELS)
        .map_err(|e| e.to_string())?;
    Ok((family, params))
}

/// Analytic pulse sampled on `samples + 1` points, flattened as
/// `[t, Ω_x, Ω_y, δ, t, ...]` with the drives in rad/ns.
pub fn pulse_rows(family: &str, t_ns: f64, delta2_ghz: f64, samples: usize) -> Result<Vec<f64>, String> {
    let (family, params) = setup(family, delta2_ghz)?;
    let w = synthesize(&params, &Recipe::analytic(family, t_ns)).map_err(|e| e.to_string())?;
    Ok(w.samples(samples.clamp(2, 4000))
        .into_iter()
        .flat_map(|(t, d)| [t, d.x, d.y, d.delta])
        .collect())
}

/// `1 − F` of the analytic pulse on a four-level Duffing ladder.
pub fn infidelity(family: &str, t_ns: f64, delta2_ghz: f64) -> Result<f64, String> {
    let (family, params) = setup(family, delta2_ghz)?;
    let w = synthesize(&params, &Recipe::analytic(family, t_ns)).map_err(|e| e.to_string())?;
    simulate(&params, &w).map(|g| g.infidelity).map_err(|e| e.to_string())
}

/// Shortest gate time at which the family's square roots stay real.
pub fn min_gate_time(family: &str, delta2_ghz: f64) -> Result<f64, String> {
    let (family, params) = setup(family, delta2_ghz)?;
    tmin_numeric(&params, &Recipe::analytic(family, 10.0)).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = pulseRows)]
pub fn pulse_rows_js(family: &str, t_ns: f64, delta2_ghz: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    pulse_rows(family, t_ns, delta2_ghz, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = infidelity)]
pub fn infidelity_js(family: &str, t_ns: f64, delta2_ghz: f64) -> Result<f64, JsError> {
    infidelity(family, t_ns, delta2_ghz).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = minGateTime)]
pub fn min_gate_time_js(family: &str, delta2_ghz: f64) -> Result<f64, JsError> {
    min_gate_time(family, delta2_ghz).map_err(|e| JsError::new(&e))
}
