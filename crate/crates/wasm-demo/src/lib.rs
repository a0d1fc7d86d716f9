//! Browser bindings: phase-diagram curves, the chain recursion and a small
//! sampler-versus-exact comparison. The plain functions are what the native
//! tests exercise; the `wasm_*` wrappers only translate errors.

use std::f64::consts::PI;

use serde_json::json;
use wasm_bindgen::prelude::*;

use cylmatter::bloch::MeasurementSpec;
use cylmatter::decompose::Decomposer;
use cylmatter::growth::{lambda_phi, theta_max};
use cylmatter::lattice::{chain_spec, empirical_tv, run_branches};
use cylmatter::matter::iterate_recursion;
use cylmatter::oracle::{exact_distribution, MAX_ORACLE_QUBITS};

/// Interleaved `[φ0, θ0, φ1, θ1, ...]` with θ in degrees over φ ∈ [0, π].
pub fn phase_curve(delta: u32, temperature: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    let mut out = Vec::with_capacity(2 * points);
    for k in 0..points {
        let phi = PI * k as f64 / (points - 1) as f64;
        out.push(phi);
        out.push(theta_max(phi, delta.max(1), temperature.max(0.0)).to_degrees());
    }
    out
}

/// Interleaved `[φ, λ(φ)]` over [0, 2π].
pub fn growth_curve(points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .flat_map(|k| {
            let phi = 2.0 * PI * k as f64 / (points - 1) as f64;
            [phi, lambda_phi(phi)]
        })
        .collect()
}

/// `R_1, R_2, ...` of the chain recursion, stopping early on convergence or divergence.
pub fn recursion_trajectory(r: f64, r1: f64, steps: usize) -> Vec<f64> {
    iterate_recursion(r.max(0.0), r1.max(0.0), steps).trajectory
}

/// Samples a CZ chain of `n` qubits measured in the XY plane and compares the
/// histogram with the exact distribution. Returns a JSON object.
pub fn chain_comparison(n: usize, theta_deg: f64, samples: u64, seed: u64) -> Result<String, String> {
    if n == 0 || n > MAX_ORACLE_QUBITS {
        return Err(format!("chain length must be in 1..={MAX_ORACLE_QUBITS}"));
    }
    let mut spec = chain_spec(n, theta_deg.to_radians(), PI, MeasurementSpec::xy(0.0));
    spec.sampler.num_samples = samples;
    spec.sampler.seed = seed;
    let run = run_branches(&spec, &Decomposer::new()).map_err(|e| e.to_string())?;
    let exact = exact_distribution(&spec).map_err(|e| e.to_string())?;
    let hist = run.histogram();
    let tv = empirical_tv(&hist, &exact).map_err(|e| e.to_string())?;
    let total = samples.max(1) as f64;
    let rows: Vec<_> = exact
        .iter()
        .map(|(k, p)| json!({ "outcome": k, "exact": p, "sampled": *hist.get(k).unwrap_or(&0) as f64 / total }))
        .collect();
    Ok(json!({ "tv": tv, "lp_gates": run.stats.lp_gates, "rows": rows }).to_string())
}

#[wasm_bindgen(js_name = phaseCurve)]
pub fn wasm_phase_curve(delta: u32, temperature: f64, points: usize) -> Vec<f64> {
    phase_curve(delta, temperature, points)
}

#[wasm_bindgen(js_name = growthCurve)]
pub fn wasm_growth_curve(points: usize) -> Vec<f64> {
    growth_curve(points)
}

#[wasm_bindgen(js_name = recursionTrajectory)]
pub fn wasm_recursion_trajectory(r: f64, r1: f64, steps: usize) -> Vec<f64> {
    recursion_trajectory(r, r1, steps)
}

#[wasm_bindgen(js_name = chainComparison)]
pub fn wasm_chain_comparison(n: usize, theta_deg: f64, samples: u64, seed: u64) -> Result<String, JsError> {
    chain_comparison(n, theta_deg, samples, seed).map_err(|e| JsError::new(&e))
}
