//! WebAssembly bindings behind the static demo page in `www/`.
//!
//! Three operations are exposed: the mean curves with their threshold, the
//! `T_c(lambda)` sweep, and the `m'(delta)` curve with its envelope. Each
//! returns a flat `Float64Array` (row-major) so the page can draw it
//! without a serialization layer. The `*_rows` functions hold the logic
//! and are plain Rust, so they are tested on the host.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use persist_lab::critical::{delta_c_lower_bound, find_delta_c, find_tc, m_prime, m_prime_envelope, DEFAULT_TC_TOL};
use persist_lab::mean::{mean_normal, mean_persistent, spectral};
use persist_lab::quadrature::QuadratureSettings;
use persist_lab::{RateContext, Rates};
use wasm_bindgen::prelude::*;

/// Delta_c tolerance for the page; interactive use does not need more.
const PAGE_DELTA_C_TOL: f64 = 1e-6;
const MAX_POINTS: usize = 2000;

fn rates(lambda: f64, a: f64, b: f64) -> Result<Rates, String> {
    Rates::new(lambda, a, b).validated(RateContext::Solver).map_err(|e| e.to_string())
}

fn grid(lo: f64, hi: f64, points: usize, log: bool) -> Result<Vec<f64>, String> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be in 2..={MAX_POINTS}"));
    }
    if !(lo < hi) || (log && lo <= 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(format!("bad range [{lo}, {hi}]"));
    }
    let step = |i: usize| i as f64 / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if log { (lo.ln() + (hi.ln() - lo.ln()) * step(i)).exp() } else { lo + (hi - lo) * step(i) })
        .collect())
}

/// Scalar summary of one rate triple.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub nu1: f64,
    pub nu2: f64,
    pub c1: f64,
    pub c2: f64,
    pub t_star: f64,
    pub tc: f64,
    pub delta_c_lower_bound: f64,
    /// `NaN` unless requested.
    pub delta_c: f64,
}

pub fn summary_of(lambda: f64, a: f64, b: f64, with_delta_c: bool) -> Result<Summary, String> {
    let r = rates(lambda, a, b)?;
    let sd = spectral(r).map_err(|e| e.to_string())?;
    let tc = find_tc(r, DEFAULT_TC_TOL).map_err(|e| e.to_string())?.value;
    let delta_c = if with_delta_c {
        find_delta_c(r, PAGE_DELTA_C_TOL, &QuadratureSettings::default()).map_err(|e| e.to_string())?.value
    } else {
        f64::NAN
    };
    Ok(Summary {
        nu1: sd.nu1,
        nu2: sd.nu2,
        c1: sd.c1,
        c2: sd.c2,
        t_star: sd.min_time().unwrap_or(f64::NAN),
        tc,
        delta_c_lower_bound: delta_c_lower_bound(r).map_err(|e| e.to_string())?,
        delta_c,
    })
}

/// Rows `[t, x(t), y(t)]` on `[0, t_max]`.
pub fn mean_rows(lambda: f64, a: f64, b: f64, t_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let sd = spectral(rates(lambda, a, b)?).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * points);
    for t in grid(0.0, t_max, points, false)? {
        out.push(t);
        out.push(mean_normal(&sd, t).map_err(|e| e.to_string())?);
        out.push(mean_persistent(&sd, t).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Rows `[lambda, T_c]`, log-spaced in lambda.
pub fn tc_rows(a: f64, b: f64, lambda_min: f64, lambda_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let mut out = Vec::with_capacity(2 * points);
    for l in grid(lambda_min, lambda_max, points, true)? {
        out.push(l);
        out.push(find_tc(rates(l, a, b)?, DEFAULT_TC_TOL).map_err(|e| e.to_string())?.value);
    }
    Ok(out)
}

/// Rows `[delta, m'(delta), lower envelope, upper envelope]`, log-spaced.
pub fn mprime_rows(lambda: f64, a: f64, b: f64, delta_min: f64, delta_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let r = rates(lambda, a, b)?;
    let sd = spectral(r).map_err(|e| e.to_string())?;
    let q = QuadratureSettings::default();
    let mut out = Vec::with_capacity(4 * points);
    for d in grid(delta_min, delta_max, points, true)? {
        let (lo, hi) = m_prime_envelope(&sd, d);
        out.extend([d, m_prime(r, d, &q).map_err(|e| e.to_string())?, lo, hi]);
    }
    Ok(out)
}

fn js<T>(res: Result<T, String>) -> Result<T, JsError> {
    res.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn summary(lambda: f64, a: f64, b: f64, with_delta_c: bool) -> Result<Summary, JsError> {
    js(summary_of(lambda, a, b, with_delta_c))
}

#[wasm_bindgen(js_name = meanCurves)]
pub fn mean_curves(lambda: f64, a: f64, b: f64, t_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    js(mean_rows(lambda, a, b, t_max, points))
}

#[wasm_bindgen(js_name = tcCurve)]
pub fn tc_curve(a: f64, b: f64, lambda_min: f64, lambda_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    js(tc_rows(a, b, lambda_min, lambda_max, points))
}

#[wasm_bindgen(js_name = mprimeCurve)]
pub fn mprime_curve(
    lambda: f64,
    a: f64,
    b: f64,
    delta_min: f64,
    delta_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    js(mprime_rows(lambda, a, b, delta_min, delta_max, points))
}
