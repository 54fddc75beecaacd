//! wasm-bindgen glue for the static demo page in `www/`. Every entry point
//! takes a TOML run config and returns JSON text.

use std::f64::consts::PI;

use bihsolve::config::RunConfig;
use bihsolve::run::evaluate;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn parse(config: &str) -> Result<RunConfig, String> {
    let cfg = RunConfig::parse(config).map_err(|e| e.to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// Image of the unit circle under the configured map, sampled at `samples`
/// angles, plus the images of the corner preimages.
pub fn outline_json(config: &str, samples: usize) -> Result<String, String> {
    let map = parse(config)?.build_map().map_err(|e| e.to_string())?;
    let points: Vec<[f64; 2]> = (0..samples.max(8))
        .map(|k| map.boundary_point(2.0 * PI * (k as f64 + 0.5) / samples.max(8) as f64))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| [x, y])
        .collect();
    let corners: Vec<[f64; 2]> = map
        .corners
        .iter()
        .map(|c| map.boundary_point(c.angle))
        .map(|(x, y)| [x, y])
        .collect();
    Ok(json!({ "map": map.name, "points": points, "corners": corners }).to_string())
}

/// Runs the configured command in memory. The JSON carries the exit status,
/// the summary text, any failures and the command's result.
pub fn run_json(config: &str) -> Result<String, String> {
    let cfg = RunConfig::parse(config).map_err(|e| e.to_string())?;
    let outcome = evaluate(&cfg, &|_| {});
    Ok(json!({
        "exit_code": outcome.exit_code,
        "summary": outcome.summary,
        "failures": outcome.failures,
        "error": outcome.error.map(|e| e.to_string()),
        "result": outcome.result,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn outline(config: &str, samples: usize) -> Result<String, JsValue> {
    outline_json(config, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn run(config: &str) -> Result<String, JsValue> {
    run_json(config).map_err(|e| JsValue::from_str(&e))
}
