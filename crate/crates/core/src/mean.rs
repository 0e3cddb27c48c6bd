//! Expected normal/persistent counts started from one persistent cell with
//! no killing, in closed form.
//!
//! With `x` the mean normal count and `y` the mean persistent count,
//!
//! ```text
//! x' = (lambda - a) x + b y
//! y' = a x - b y,          x(0) = 0, y(0) = 1
//! ```
//!
//! The matrix has determinant `-lambda b < 0`, so its eigenvalues satisfy
//! `nu1 > 0 > nu2` and
//!
//! ```text
//! y(t) = c1 exp(nu2 t) + c2 exp(nu1 t)
//! x(t) = b (exp(nu1 t) - exp(nu2 t)) / sqrt(disc)
//! ```
//!
//! The second line is the usual eigenvector expansion with the factors of
//! `1/a` cancelled against `c1` and `c2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate_rates, RateContext, Rates};

/// Largest `nu1 * t` accepted by the linear-scale evaluators: half of the
/// representable exponent range.
pub const SATURATION_EXPONENT: f64 = 0.5 * 709.782_712_893_384;

/// Eigenstructure of the mean-dynamics system and the coefficients of `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralData {
    /// `(a + b - lambda)^2 + 4 b lambda`.
    pub disc: f64,
    pub sqrt_disc: f64,
    /// Positive eigenvalue.
    pub nu1: f64,
    /// Negative eigenvalue.
    pub nu2: f64,
    /// Coefficient of `exp(nu2 t)` in `y`.
    pub c1: f64,
    /// Coefficient of `exp(nu1 t)` in `y`.
    pub c2: f64,
    pub rates: Rates,
}

/// Which derivative of `y` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    First,
    Second,
}

pub fn spectral(r: Rates) -> Result<SpectralData> {
    let r = validate_rates(r, RateContext::Analytic)?;
    let Rates { lambda, a, b } = r;
    let trace = lambda - a - b;
    let off = 2.0 * (b * lambda).sqrt();
    let sqrt_disc = trace.hypot(off);
    let disc = sqrt_disc * sqrt_disc;

    // Take the cancellation-free root first, the other from nu1 * nu2 = -lambda b.
    let (nu1, nu2) = if trace >= 0.0 {
        let nu1 = 0.5 * (trace + sqrt_disc);
        (nu1, -lambda * b / nu1)
    } else {
        let nu2 = 0.5 * (trace - sqrt_disc);
        (-lambda * b / nu2, nu2)
    };

    // c2 = (sqrt_disc - (lambda + b - a)) / (2 sqrt_disc), rationalized using
    // disc - (lambda + b - a)^2 = 4ab so tiny `a` loses no digits.
    let shifted = lambda + b - a;
    let c2 = if shifted > 0.0 {
        2.0 * a * b / (sqrt_disc * (sqrt_disc + shifted))
    } else {
        (sqrt_disc - shifted) / (2.0 * sqrt_disc)
    };
    let c1 = (b - a + lambda + sqrt_disc) / (2.0 * sqrt_disc);

    Ok(SpectralData { disc, sqrt_disc, nu1, nu2, c1, c2, rates: r })
}

impl SpectralData {
    /// `K = 2 max(c1 nu2^2, c2 nu1^2)`, so that `y''(t) <= K exp(nu1 t)`.
    pub fn curvature_constant(&self) -> f64 {
        2.0 * (self.c1 * self.nu2 * self.nu2).max(self.c2 * self.nu1 * self.nu1)
    }

    /// Time of the unique minimum of `y`, i.e. the root of `y'`.
    ///
    /// `None` when `a = 0`: then `c2 = 0` and `y` decreases forever.
    pub fn min_time(&self) -> Option<f64> {
        if self.c2 <= 0.0 {
            return None;
        }
        let log_ratio = self.c1.ln() + (-self.nu2).ln() - self.c2.ln() - self.nu1.ln();
        Some(log_ratio / (self.nu1 - self.nu2))
    }

    /// Time at which the two exponential modes of `y` have equal weight.
    pub(crate) fn crossover_time(&self) -> Option<f64> {
        if self.c2 <= 0.0 {
            return None;
        }
        Some(((self.c1 / self.c2).ln() / (self.nu1 - self.nu2)).max(0.0))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")))
    }
}

fn check_saturation(sd: &SpectralData, t: f64) -> Result<()> {
    let exponent = sd.nu1 * t;
    if exponent > SATURATION_EXPONENT {
        return Err(Error::Saturated { exponent, limit: SATURATION_EXPONENT });
    }
    Ok(())
}

/// `y(t)`: expected persistent count at `t`.
pub fn mean_persistent(sd: &SpectralData, t: f64) -> Result<f64> {
    check_time(t)?;
    check_saturation(sd, t)?;
    Ok(sd.c1 * (sd.nu2 * t).exp() + sd.c2 * (sd.nu1 * t).exp())
}

/// `ln y(t)`, evaluated without forming `y` so it never overflows.
pub fn ln_mean_persistent(sd: &SpectralData, t: f64) -> f64 {
    let slow = sd.c1.ln() + sd.nu2 * t;
    if sd.c2 <= 0.0 {
        return slow;
    }
    let fast = sd.c2.ln() + sd.nu1 * t;
    let (hi, lo) = if fast >= slow { (fast, slow) } else { (slow, fast) };
    hi + (lo - hi).exp().ln_1p()
}

/// `x(t)`: expected normal count at `t`.
pub fn mean_normal(sd: &SpectralData, t: f64) -> Result<f64> {
    if sd.rates.a == 0.0 {
        return Err(Error::DegenerateRate("a"));
    }
    check_time(t)?;
    check_saturation(sd, t)?;
    let gap = sd.nu1 - sd.nu2;
    Ok(sd.rates.b / sd.sqrt_disc * (sd.nu2 * t).exp() * (gap * t).exp_m1())
}

/// `y'(t)` or `y''(t)`.
pub fn mean_persistent_deriv(sd: &SpectralData, t: f64, order: DerivOrder) -> Result<f64> {
    check_time(t)?;
    check_saturation(sd, t)?;
    let (k1, k2) = match order {
        DerivOrder::First => (sd.nu2, sd.nu1),
        DerivOrder::Second => (sd.nu2 * sd.nu2, sd.nu1 * sd.nu1),
    };
    Ok(sd.c1 * k1 * (sd.nu2 * t).exp() + sd.c2 * k2 * (sd.nu1 * t).exp())
}

/// `(c2 exp(nu1 t), exp(nu1 t))`, which bracket `y(t)`.
pub fn envelope_bounds(sd: &SpectralData, t: f64) -> Result<(f64, f64)> {
    check_time(t)?;
    check_saturation(sd, t)?;
    let grow = (sd.nu1 * t).exp();
    Ok((sd.c2 * grow, grow))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn balanced() -> SpectralData {
        spectral(Rates::new(2.0, 1.0, 1.0)).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn spectral_reference_point() {
        let sd = balanced();
        assert!(close(sd.disc, 8.0, 1e-14));
        assert!(close(sd.nu1, SQRT2, 1e-15));
        assert!(close(sd.nu2, -SQRT2, 1e-15));
        assert!(close(sd.c1, (2.0 + SQRT2) / 4.0, 1e-15));
        assert!(close(sd.c2, (2.0 - SQRT2) / 4.0, 1e-15));
        assert!(close(sd.nu1 * sd.nu2, -2.0, 1e-14));
    }

    #[test]
    fn spectral_zero_a_collapses() {
        let sd = spectral(Rates::new(2.0, 0.0, 1.0)).unwrap();
        assert_eq!(sd.nu1, 2.0);
        assert_eq!(sd.nu2, -1.0);
        assert_eq!(sd.c1, 1.0);
        assert_eq!(sd.c2, 0.0);
        assert!(sd.min_time().is_none());
    }

    #[test]
    fn tiny_a_keeps_c2_digits() {
        // mpmath, 40 digits
        let sd = spectral(Rates::new(2.0, 1e-6, 1e-3)).unwrap();
        assert!((sd.c2 / 2.497_504_368_135_140_5e-10 - 1.0).abs() < 1e-12);
        assert!((sd.nu1 / 1.999_999_000_499_750_4 - 1.0).abs() < 1e-14);
        assert!((sd.nu2 / -1.000_000_499_750_374_6e-3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_persistent_values() {
        let sd = balanced();
        assert!(close(mean_persistent(&sd, 0.0).unwrap(), 1.0, 1e-15));
        // mpmath: 0.80988468459998018498...
        assert!(close(mean_persistent(&sd, 1.0).unwrap(), 0.809_884_684_599_980_2, 1e-14));
        let deg = spectral(Rates::new(2.0, 0.0, 1.0)).unwrap();
        assert!(close(mean_persistent(&deg, 3.0).unwrap(), (-3.0f64).exp(), 1e-16));
        assert!(mean_persistent(&sd, -1.0).is_err());
        assert!(matches!(mean_persistent(&sd, 1e3), Err(Error::Saturated { .. })));
    }

    #[test]
    fn log_form_matches_linear_form() {
        let sd = balanced();
        for &t in &[0.0, 0.3, 1.0, 5.0, 40.0] {
            let lin = mean_persistent(&sd, t).unwrap().ln();
            assert!(close(ln_mean_persistent(&sd, t), lin, 1e-13 * (1.0 + lin.abs())));
        }
        assert!(ln_mean_persistent(&sd, 1e4).is_finite());
    }

    #[test]
    fn mean_normal_values() {
        let sd = balanced();
        assert_eq!(mean_normal(&sd, 0.0).unwrap(), 0.0);
        let expect = (SQRT2).sinh() / SQRT2;
        assert!(close(mean_normal(&sd, 1.0).unwrap(), expect, 1e-14));
        let h = 1e-6;
        let fd = (mean_normal(&sd, h).unwrap() - mean_normal(&sd, 0.0).unwrap()) / h;
        assert!(close(fd, 1.0, 1e-5));
        let deg = spectral(Rates::new(2.0, 0.0, 1.0)).unwrap();
        assert_eq!(mean_normal(&deg, 1.0), Err(Error::DegenerateRate("a")));
    }

    #[test]
    fn derivatives_at_origin() {
        let sd = balanced();
        let d1 = mean_persistent_deriv(&sd, 0.0, DerivOrder::First).unwrap();
        assert!(close(d1, -1.0, 1e-14));
        let d2 = mean_persistent_deriv(&sd, 0.0, DerivOrder::Second).unwrap();
        assert!(close(d2, 2.0, 1e-14));
        let k = sd.curvature_constant();
        assert!(close(k, 2.0 * (2.0 + SQRT2) / 2.0, 1e-14));
        for i in 0..50 {
            let t = i as f64 * 0.2;
            let d2 = mean_persistent_deriv(&sd, t, DerivOrder::Second).unwrap();
            assert!(d2 <= k * (sd.nu1 * t).exp());
        }
    }

    #[test]
    fn envelopes() {
        let sd = balanced();
        let (lo, hi) = envelope_bounds(&sd, 0.0).unwrap();
        assert!(close(lo, 0.146_446_609_406_726_24, 1e-15));
        assert_eq!(hi, 1.0);
        for i in 0..40 {
            let t = i as f64 * 0.25;
            let (lo, hi) = envelope_bounds(&sd, t).unwrap();
            let y = mean_persistent(&sd, t).unwrap();
            assert!(lo < y && y <= hi * (1.0 + 1e-15));
        }
        let deg = spectral(Rates::new(2.0, 0.0, 1.0)).unwrap();
        let (lo, hi) = envelope_bounds(&deg, 1.0).unwrap();
        assert_eq!(lo, 0.0);
        assert!(close(hi, 2.0f64.exp(), 1e-14));
    }

    #[test]
    fn minimum_of_y() {
        let sd = balanced();
        // mpmath: 0.62322524014023051339...
        let t_star = sd.min_time().unwrap();
        assert!(close(t_star, 0.623_225_240_140_230_5, 1e-14));
        let d = mean_persistent_deriv(&sd, t_star, DerivOrder::First).unwrap();
        assert!(d.abs() < 1e-14);
    }
}
