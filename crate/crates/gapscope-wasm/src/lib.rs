//! Browser bindings. Every export returns a flat `Float64Array` of
//! fixed-width records so the page can plot without parsing. The plain
//! functions behind the exports are usable (and tested) natively.

use gapscope::arithmetic::gcd;
use gapscope::cocycle::{lyapunov_exponent, SchrodingerCocycle};
use gapscope::spectrum::{norm_bound, rational_spectrum, IdsEstimator};
use gapscope::Frequency;
use wasm_bindgen::prelude::*;

/// Largest denominator the page may request.
pub const MAX_Q: u32 = 60;

fn frequency(spec: &str) -> Result<Frequency, String> {
    match spec.trim() {
        "golden" => Ok(Frequency::golden()),
        "silver" => Ok(Frequency::silver()),
        s => {
            let x: f64 = s
                .parse()
                .map_err(|_| format!("alpha must be golden, silver or a number, got {s:?}"))?;
            Frequency::expand(x, 40).map_err(|e| e.to_string())
        }
    }
}

fn check_lambda(lambda: f64) -> Result<(), String> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(format!("lambda must be positive, got {lambda}"))
    }
}

fn energies(lambda: f64, points: usize) -> Vec<f64> {
    let b = norm_bound(lambda) + 0.1;
    let n = points.max(2);
    (0..n).map(|i| -b + 2.0 * b * i as f64 / (n - 1) as f64).collect()
}

/// Bands of every reduced `p/q` in `[0, 1]` with `q ≤ q_max`, as
/// `(p/q, lo, hi)` triples.
pub fn butterfly_bands(lambda: f64, q_max: u32, theta_samples: usize) -> Result<Vec<f64>, String> {
    check_lambda(lambda)?;
    if !(1..=MAX_Q).contains(&q_max) {
        return Err(format!("q_max must lie in 1..={MAX_Q}, got {q_max}"));
    }
    let mut out = Vec::new();
    for q in 1..=q_max as i64 {
        for p in (0..=q).filter(|&p| gcd(p, q) == 1) {
            for b in rational_spectrum(lambda, p, q, theta_samples).map_err(|e| e.to_string())? {
                out.extend([p as f64 / q as f64, b.lo, b.hi]);
            }
        }
    }
    Ok(out)
}

/// `(E, N(E))` pairs on an even grid over the spectrum's hull.
pub fn ids_points(lambda: f64, alpha: &str, n: usize, phases: usize, points: usize) -> Result<Vec<f64>, String> {
    check_lambda(lambda)?;
    let counter = IdsEstimator::new(lambda, &frequency(alpha)?, n.clamp(10, 20_000), phases.max(1), 0);
    Ok(energies(lambda, points).into_iter().flat_map(|e| [e, counter.at(e)]).collect())
}

/// `(E, L(E))` pairs on an even grid over the spectrum's hull.
pub fn lyapunov_points(
    lambda: f64,
    alpha: &str,
    iters: usize,
    phases: usize,
    points: usize,
) -> Result<Vec<f64>, String> {
    check_lambda(lambda)?;
    let alpha = frequency(alpha)?;
    let mut out = Vec::with_capacity(2 * points);
    for e in energies(lambda, points) {
        let c = SchrodingerCocycle::new(lambda, e, alpha.clone()).map_err(|e| e.to_string())?;
        out.extend([e, lyapunov_exponent(&c, iters.max(1), phases.max(1), 0)]);
    }
    Ok(out)
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn butterfly(lambda: f64, q_max: u32, theta_samples: usize) -> Result<Vec<f64>, JsError> {
    js(butterfly_bands(lambda, q_max, theta_samples))
}

#[wasm_bindgen]
pub fn ids_curve(lambda: f64, alpha: &str, n: usize, phases: usize, points: usize) -> Result<Vec<f64>, JsError> {
    js(ids_points(lambda, alpha, n, phases, points))
}

#[wasm_bindgen]
pub fn lyapunov_curve(lambda: f64, alpha: &str, iters: usize, phases: usize, points: usize) -> Result<Vec<f64>, JsError> {
    js(lyapunov_points(lambda, alpha, iters, phases, points))
}
