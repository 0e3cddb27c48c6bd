//! Critical thresholds of the two killing schedules.
//!
//! * Periodic killing every `T`: the persistent counts at killing times
//!   form a Galton-Watson process with offspring mean `y(T)`, so the
//!   threshold `T_c` is the unique positive root of `y(t) = 1`.
//! * Exponential inter-kill times of rate `delta`: the counts form a
//!   branching process in an i.i.d. environment, classified by the sign of
//!
//!   ```text
//!   m'(delta) = E[ln y(T1)] = int_0^inf ln y(u / delta) exp(-u) du.
//!   ```
//!
//!   `delta_c` is the sign change of `m'`; intensities `>= delta_c` die out.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mean::{ln_mean_persistent, spectral, SpectralData, SATURATION_EXPONENT};
use crate::model::{validate_rates, RateContext, Rates};
use crate::quadrature::{refine, PanelPlan, QuadratureSettings};
use crate::roots::{bisect, brent};

pub const DEFAULT_TC_TOL: f64 = 1e-10;
pub const DEFAULT_DELTA_C_TOL: f64 = 1e-6;

const MAX_ITER: u32 = 500;
/// Log-spaced probes between the two ends of the `delta_c` bracket used to
/// detect more than one sign change.
const DELTA_SCAN_POINTS: usize = 32;

/// A located threshold together with its final bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalResult {
    pub value: f64,
    pub bracket: (f64, f64),
    /// `|target(value)|`: `|y(T_c) - 1|` or `|m'(delta_c)|`.
    pub residual: f64,
    pub iterations: u32,
    /// Set when the coarse scan saw more than one sign change; `value` is then
    /// the smallest one.
    pub multiple_sign_changes: bool,
}

fn solver_spectral(r: Rates) -> Result<SpectralData> {
    spectral(validate_rates(r, RateContext::Solver)?)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta must be finite and positive, got {delta}")))
    }
}

/// Root of `y(t) = 1` on `(0, inf)`.
///
/// `y - 1` vanishes at `t = 0` and is negative on `(0, t*]`, so the search
/// starts at the minimum `t*` and doubles the upper end until `y > 1`.
pub fn find_tc(r: Rates, tol: f64) -> Result<CriticalResult> {
    check_tol(tol)?;
    let sd = solver_spectral(r)?;
    find_tc_spectral(&sd, tol)
}

pub(crate) fn find_tc_spectral(sd: &SpectralData, tol: f64) -> Result<CriticalResult> {
    let t_star = sd.min_time().ok_or(Error::BracketFailure { last_probe: 0.0 })?;
    let target = |t: f64| Ok(ln_mean_persistent(sd, t));
    // ln y >= ln c2 + nu1 t, so a sign change is certain past this exponent.
    let exponent_limit = SATURATION_EXPONENT - sd.c2.ln();
    let mut hi = (2.0 * t_star).max(1.0 / sd.nu1);
    while ln_mean_persistent(sd, hi) <= 0.0 {
        hi *= 2.0;
        if !(sd.nu1 * hi <= exponent_limit) {
            return Err(Error::BracketFailure { last_probe: hi });
        }
    }
    let found = brent(target, t_star, hi, tol, MAX_ITER)?;
    Ok(CriticalResult {
        value: found.root,
        bracket: (found.lo, found.hi),
        residual: ln_mean_persistent(sd, found.root).exp_m1().abs(),
        iterations: found.iterations,
        multiple_sign_changes: false,
    })
}

/// `T_c` in closed form when `lambda = a + b`.
///
/// The mean matrix is then trace-free, `nu1 = -nu2 = sqrt(b lambda)`, and
/// `y(t) = 1` is a quadratic in `exp(nu1 t)` with roots `1` and `c1 / c2`.
pub fn tc_closed_form_balanced(r: Rates) -> Result<f64> {
    let r = validate_rates(r, RateContext::Solver)?;
    let gap = (r.lambda - r.a - r.b).abs();
    if !r.is_balanced() {
        return Err(Error::NotBalanced { gap });
    }
    // (sl + sb) / (sl - sb) = (sl + sb)^2 / (lambda - b), free of cancellation for small a.
    let (sl, sb) = (r.lambda.sqrt(), r.b.sqrt());
    Ok((2.0 * (sl + sb).ln() - (r.lambda - r.b).ln()) / (r.b * r.lambda).sqrt())
}

/// `ln(1 + rho exp(-kappa t))` written as a softplus of `ln rho - kappa t`.
fn log_correction(log_rho: f64, kappa: f64, t: f64) -> f64 {
    let z = log_rho - kappa * t;
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Panels in `u = delta t` resolving the bend of `ln y` at the crossover of
/// its two exponential modes, plus any extra breakpoints (already in `u`).
fn plan_for(sd: &SpectralData, delta: f64, extra: &[f64]) -> PanelPlan {
    let kappa = sd.nu1 - sd.nu2;
    let width = delta / kappa;
    let cross = delta * sd.crossover_time().unwrap_or(0.0);
    PanelPlan::new(extra, Some((cross - 16.0 * width, cross + 40.0 * width, 2.0 * width)))
}

/// `m'(delta) = int_0^inf ln y(u / delta) exp(-u) du`.
///
/// Evaluated as `ln c2 + nu1 / delta + int_0^inf ln(1 + (c1/c2) exp(-(nu1 - nu2) u / delta)) exp(-u) du`;
/// the remaining integrand is nonnegative and bounded by `-ln c2`, so the
/// estimate stays inside `[ln c2 + nu1/delta, nu1/delta]`.
pub fn m_prime(r: Rates, delta: f64, q: &QuadratureSettings) -> Result<f64> {
    check_delta(delta)?;
    let sd = solver_spectral(r)?;
    m_prime_spectral(&sd, delta, q)
}

pub(crate) fn m_prime_spectral(sd: &SpectralData, delta: f64, q: &QuadratureSettings) -> Result<f64> {
    let log_rho = (sd.c1 / sd.c2).ln();
    let kappa = sd.nu1 - sd.nu2;
    let plan = plan_for(sd, delta, &[]);
    let g = |u: f64| log_correction(log_rho, kappa, u / delta);
    let correction = refine(q, |leg, lag| plan.integrate(&g, leg, lag))?;
    let ceiling = -sd.c2.ln();
    Ok(sd.c2.ln() + sd.nu1 / delta + correction.clamp(0.0, ceiling))
}

/// Envelope `[ln c2 + nu1/delta, nu1/delta]` containing `m'(delta)`.
pub fn m_prime_envelope(sd: &SpectralData, delta: f64) -> (f64, f64) {
    (sd.c2.ln() + sd.nu1 / delta, sd.nu1 / delta)
}

/// Upper bound on `m'` for `delta > nu1`:
/// `y'(0)/delta + (2K/delta^2) / (1 - nu1/delta)^3` with `y'(0) = -b` and
/// `K = 2 max(c1 nu2^2, c2 nu1^2)`.
pub fn large_delta_upper_bound(sd: &SpectralData, delta: f64) -> Option<f64> {
    if delta <= sd.nu1 {
        return None;
    }
    let k = sd.curvature_constant();
    let shrink = 1.0 - sd.nu1 / delta;
    Some(-sd.rates.b / delta + 2.0 * k / (delta * delta) / shrink.powi(3))
}

/// `-nu1 / ln c2`: below this intensity `m' > 0` and the population
/// survives with positive probability.
pub fn delta_c_lower_bound(r: Rates) -> Result<f64> {
    let sd = solver_spectral(r)?;
    Ok(lower_bound_spectral(&sd))
}

fn lower_bound_spectral(sd: &SpectralData) -> f64 {
    -sd.nu1 / sd.c2.ln()
}

/// Smallest intensity from `2 nu1` upward (by doubling) at which the
/// explicit large-`delta` bound is negative.
fn upper_seed(sd: &SpectralData) -> Result<f64> {
    let mut delta = 2.0 * sd.nu1;
    for _ in 0..200 {
        if let Some(bound) = large_delta_upper_bound(sd, delta) {
            if bound < 0.0 {
                return Ok(delta);
            }
        }
        delta *= 2.0;
    }
    Err(Error::BracketFailure { last_probe: delta })
}

/// Sign change of `delta -> m'(delta)`.
pub fn find_delta_c(r: Rates, tol: f64, q: &QuadratureSettings) -> Result<CriticalResult> {
    check_tol(tol)?;
    let sd = solver_spectral(r)?;
    let lo = lower_bound_spectral(&sd);
    let hi = upper_seed(&sd)?.max(lo * 2.0);
    let m = |d: f64| m_prime_spectral(&sd, d, q);

    let ratio = (hi / lo).powf(1.0 / (DELTA_SCAN_POINTS - 1) as f64);
    let probes: Vec<f64> = (0..DELTA_SCAN_POINTS)
        .map(|i| if i + 1 == DELTA_SCAN_POINTS { hi } else { lo * ratio.powi(i as i32) })
        .collect();
    let values = probes.iter().map(|&d| m(d)).collect::<Result<Vec<_>>>()?;
    if !(values[0] > 0.0) || !(values[DELTA_SCAN_POINTS - 1] < 0.0) {
        return Err(Error::BracketFailure { last_probe: hi });
    }
    let changes: Vec<usize> = (0..DELTA_SCAN_POINTS - 1)
        .filter(|&i| (values[i] > 0.0) != (values[i + 1] > 0.0))
        .collect();
    let first = changes[0];
    let found = bisect(m, probes[first], probes[first + 1], tol, MAX_ITER)?;
    Ok(CriticalResult {
        value: found.root,
        bracket: (found.lo, found.hi),
        residual: m(found.root)?.abs(),
        iterations: found.iterations,
        multiple_sign_changes: changes.len() > 1,
    })
}

/// `E|ln y(T1)|` split at `T_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsLogMean {
    pub total: f64,
    /// `int_0^{T_c} |ln y(t)| delta exp(-delta t) dt`.
    pub below: f64,
    /// `int_{T_c}^inf ln y(t) delta exp(-delta t) dt`, at most `nu1 / delta`.
    pub tail: f64,
    pub tc: f64,
}

pub fn abs_log_mean(r: Rates, delta: f64, q: &QuadratureSettings) -> Result<AbsLogMean> {
    check_delta(delta)?;
    let sd = solver_spectral(r)?;
    let tc = find_tc_spectral(&sd, DEFAULT_TC_TOL)?.value;
    let split = delta * tc;
    let plan = plan_for(&sd, delta, &[split]);
    let f = |u: f64| ln_mean_persistent(&sd, u / delta);
    let below = refine(q, |leg, lag| -plan.integrate_range(&f, 0.0, split, leg, lag))?;
    let tail = refine(q, |leg, lag| plan.integrate_range(&f, split, f64::INFINITY, leg, lag))?;
    Ok(AbsLogMean { total: below + tail, below, tail, tc })
}
