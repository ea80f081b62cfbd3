//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function has a plain Rust twin (`*_json`, `sobol_grid`) so
//! the logic is testable on the host; the `#[wasm_bindgen]` wrappers only
//! convert errors.

use landscape_core::analysis::{find_local_optima, folding_test};
use landscape_core::collect::{run_pipeline, Bump, PhasePlan, SurrogatePhase, SurrogateSpec, SurrogateTrainable};
use landscape_core::dataset::{aggregate, normalize, EvalKind, NormScope};
use landscape_core::models::{fit_surface_triple, grid_eval, FitOptions, GridSpec, ModelKind};
use landscape_core::plot::heatmap_svg;
use landscape_core::sobol::{sample_unit_cube, Scramble};
use landscape_core::space::{build_space, HyperparameterDef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 1 << 14;

/// Flattened `count x dims` Sobol points; `seed < 0` means unscrambled.
pub fn sobol_grid(dims: usize, count: usize, seed: i64) -> Result<Vec<f64>, String> {
    if count > MAX_POINTS {
        return Err(format!("at most {MAX_POINTS} points"));
    }
    let scramble = if seed < 0 { Scramble::None } else { Scramble::DigitalShift(seed as u64) };
    let pts = sample_unit_cube(dims, count, scramble).map_err(|e| e.to_string())?;
    Ok(pts.iter().flat_map(|p| p.coords().to_vec()).collect())
}

fn histogram_svg(samples: &[f64], pivot: Option<f64>) -> String {
    let (w, h, bins) = (480.0, 200.0, 30usize);
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-9);
    let mut counts = vec![0usize; bins];
    for x in samples {
        counts[(((x - lo) / span * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let top = *counts.iter().max().unwrap_or(&1) as f64;
    let bw = w / bins as f64;
    let mut svg = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    for (i, c) in counts.iter().enumerate() {
        let bh = *c as f64 / top * (h - 10.0);
        svg += &format!(
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{bh:.1}" fill="#4878a8"/>"##,
            i as f64 * bw,
            h - bh,
            bw - 1.0
        );
    }
    if let Some(s) = pivot {
        let x = (s - lo) / span * w;
        svg += &format!(r##"<line x1="{x:.1}" x2="{x:.1}" y1="0" y2="{h}" stroke="#d62728" stroke-dasharray="4 3"/>"##);
    }
    svg + "</svg>"
}

/// Folding test on `n` draws from 0.5·N(−d/2, 1) + 0.5·N(d/2, 1).
pub fn folding_json(n: usize, separation: f64, seed: u64) -> Result<String, String> {
    if !(2..=100_000).contains(&n) {
        return Err("n must lie in [2, 100000]".into());
    }
    if !separation.is_finite() || separation < 0.0 {
        return Err("separation must be finite and >= 0".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).map_err(|e| e.to_string())?;
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let side = if rng.random::<bool>() { 0.5 } else { -0.5 };
            side * separation + unit.sample(&mut rng)
        })
        .collect();
    let out = folding_test(&samples, 0.05, 1000, seed).map_err(|e| e.to_string())?;
    Ok(json!({
        "phi": out.phi,
        "pivot": out.pivot,
        "p_value": out.p_value,
        "category": out.category.name(),
        "svg": histogram_svg(&samples, out.pivot),
    })
    .to_string())
}

/// Collects a one-phase surrogate landscape with a bump at `(cx, cy)`, fits
/// the chosen model and renders the mean surface with its local optima.
pub fn landscape_json(cx: f64, cy: f64, noise: f64, configs: usize, model: &str) -> Result<String, String> {
    if !(0.0..=1.0).contains(&cx) || !(0.0..=1.0).contains(&cy) {
        return Err("bump center must lie in the unit square".into());
    }
    if !(4..=256).contains(&configs) {
        return Err("configs must lie in [4, 256]".into());
    }
    let kind: ModelKind = model.parse().map_err(|e: landscape_core::Error| e.to_string())?;
    let space = build_space(vec![
        HyperparameterDef::log("learning_rate", 1e-4, 0.1),
        HyperparameterDef::log("gamma", 0.8, 0.9999),
    ])
    .map_err(|e| e.to_string())?;
    let spec = SurrogateSpec {
        phases: vec![SurrogatePhase {
            end_step: 100,
            baseline: 0.0,
            bumps: vec![Bump {
                center: vec![cx, cy],
                height: 1.0,
                width: 0.15,
            }],
        }],
        seed_offset: 0.0,
        noise,
        bimodal_region: None,
        skill_gain: 1.0,
    };
    let trainable = SurrogateTrainable::new(space.clone(), spec).map_err(|e| e.to_string())?;
    let plan = PhasePlan {
        space,
        num_configs: configs,
        seeds: vec![0, 1, 2],
        phase_steps: vec![100],
        t_final: 100,
        eval_episodes: 10,
        sampler_seed: 11,
        eval_seed: 12,
    };
    let archive = run_pipeline(&plan, &trainable).map_err(|e| e.to_string())?;
    let stats = aggregate(&archive.landscape, EvalKind::Landscape, 1).map_err(|e| e.to_string())?;
    let (_, affines) = normalize(std::slice::from_ref(&stats), NormScope::PooledAllPhases).map_err(|e| e.to_string())?;
    let triple = fit_surface_triple(&stats, kind, &FitOptions::default(), affines[0]).map_err(|e| e.to_string())?;
    let grid = grid_eval(&triple.mean, &GridSpec::midpoint(2, 0, 1, 41)).map_err(|e| e.to_string())?;
    let optima = find_local_optima(&grid).map_err(|e| e.to_string())?;
    let (i, j) = grid.argmax();
    let title = format!("{} mean surface, {configs} configs", kind.name());
    Ok(json!({
        "argmax": grid.node_point(i, j),
        "maxima": optima.maxima.len(),
        "minima": optima.minima.len(),
        "selected": archive.chosen[0].conf_index,
        "svg": heatmap_svg(&grid, &optima, &title, "learning_rate (unit)", "gamma (unit)"),
    })
    .to_string())
}

#[wasm_bindgen(js_name = sobolPoints)]
pub fn sobol_points(dims: u32, count: u32, seed: i32) -> Result<Vec<f64>, JsValue> {
    sobol_grid(dims as usize, count as usize, seed as i64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = foldingDemo)]
pub fn folding_demo(n: u32, separation: f64, seed: u32) -> Result<String, JsValue> {
    folding_json(n as usize, separation, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = landscapeDemo)]
pub fn landscape_demo(cx: f64, cy: f64, noise: f64, configs: u32, model: &str) -> Result<String, JsValue> {
    landscape_json(cx, cy, noise, configs as usize, model).map_err(|e| JsValue::from_str(&e))
}
