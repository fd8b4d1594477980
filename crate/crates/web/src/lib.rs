//! WebAssembly bindings for a few small demonstrations. Every entry point
//! returns a JSON string, or throws the error message.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use ugsos::approx::{build_step_poly, step};
use ugsos::graph::noisy_hypercube;
use ugsos::instance::{brute_force_opt, plant_instance};
use ugsos::johnson::spectrum_check;
use ugsos::rounding::derandomized_round;
use ugsos::sos::{build_relaxation, solve_sdp};
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct StepCurve {
    pub degree: usize,
    pub max_deviation: f64,
    pub passed: bool,
    pub xs: Vec<f64>,
    pub poly: Vec<f64>,
    pub target: Vec<f64>,
}

pub fn step_curve(alpha: f64, eps: f64, delta: f64, points: usize) -> ugsos::Result<StepCurve> {
    let p = build_step_poly(alpha, eps, delta)?;
    let inv = p.check_invariants();
    let points = points.clamp(2, 2000);
    let xs: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    Ok(StepCurve {
        degree: p.degree(),
        max_deviation: inv.max_deviation,
        passed: inv.passed,
        poly: xs.iter().map(|&x| p.eval(x)).collect(),
        target: xs.iter().map(|&x| step(alpha, x)).collect(),
        xs,
    })
}

#[derive(Serialize)]
pub struct RoundDemo {
    pub vertices: usize,
    pub edges: usize,
    pub planted_value: f64,
    pub sdp_value: f64,
    pub rounded_value: f64,
    pub optimum: f64,
    pub assignment: Vec<usize>,
}

/// Planted noisy hypercube, degree-2 relaxation, derandomized rounding.
pub fn round_demo(d: usize, k: usize, eps: f64, seed: u64) -> ugsos::Result<RoundDemo> {
    if d > 3 || k > 3 {
        return Err(ugsos::Error::Parameter("demo is limited to d <= 3 and k <= 3".into()));
    }
    let g = noisy_hypercube(d, 0.3)?;
    let (inst, x) = plant_instance(&g, k, eps, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let sol = solve_sdp(&build_relaxation(&inst, 2)?, 1e-7)?;
    let out = derandomized_round(&sol.pe.symmetrize()?, &inst, None)?;
    let assignment = out.full_assignment();
    Ok(RoundDemo {
        vertices: inst.num_vertices(),
        edges: inst.edges().len(),
        planted_value: inst.value(&x)?,
        sdp_value: sol.value,
        rounded_value: inst.value(&assignment)?,
        optimum: brute_force_opt(&inst, 1_000_000)?.1,
        assignment,
    })
}

fn respond<T: Serialize>(r: ugsos::Result<T>) -> Result<String, JsValue> {
    r.map(|v| ugsos::json::to_string(&v)).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = stepPolynomial)]
pub fn step_polynomial(alpha: f64, eps: f64, delta: f64, points: usize) -> Result<String, JsValue> {
    respond(step_curve(alpha, eps, delta, points))
}

#[wasm_bindgen(js_name = johnsonSpectrum)]
pub fn johnson_spectrum(n: usize, l: usize, alpha: f64) -> Result<String, JsValue> {
    respond(spectrum_check(n, l, alpha))
}

#[wasm_bindgen(js_name = solveAndRound)]
pub fn solve_and_round(d: usize, k: usize, eps: f64, seed: u32) -> Result<String, JsValue> {
    respond(round_demo(d, k, eps, seed as u64))
}
