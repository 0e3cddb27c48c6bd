//! Gauss rules and the panel plan used for integrals against `exp(-u)` on
//! the half line.
//!
//! Integrals are split into Gauss-Legendre panels over `[0, U]` (finer
//! panels across the region where the integrand bends) plus a
//! Gauss-Laguerre rule for `[U, inf)`. Refinement doubles the node count
//! of every rule until two successive estimates agree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node counts above this are clamped for the Laguerre rule; the
/// three-term recurrence overflows well before `n = 200`.
pub const MAX_LAGUERRE_NODES: usize = 128;

/// Panels beyond `u = 700` contribute less than `exp(-700)` and are dropped.
const NEGLIGIBLE_WEIGHT_U: f64 = 700.0;

/// Settings for the adaptive semi-infinite rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Initial nodes per rule (at least 16).
    pub node_count: usize,
    /// Successive estimates must agree to this, relative to `max(1, |value|)`.
    pub refinement_tolerance: f64,
    /// Maximum number of node doublings.
    pub max_refinements: u32,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self { node_count: 16, refinement_tolerance: 1e-12, max_refinements: 6 }
    }
}

impl QuadratureSettings {
    pub fn validated(self) -> Result<Self> {
        if self.node_count < 16 {
            return Err(Error::InvalidArgument(format!(
                "node_count must be at least 16, got {}",
                self.node_count
            )));
        }
        if !(self.refinement_tolerance > 0.0) {
            return Err(Error::InvalidArgument(
                "refinement_tolerance must be positive".into(),
            ));
        }
        Ok(self)
    }
}

/// Nodes and weights of an `n`-point Gauss rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss-Legendre rule on `[-1, 1]`.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_eval(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_eval(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Gauss-Laguerre rule for `int_0^inf f(x) exp(-x) dx`.
    pub fn laguerre(n: usize) -> Self {
        assert!((1..=MAX_LAGUERRE_NODES).contains(&n));
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut z = 0.0;
        for i in 0..n {
            z = match i {
                0 => 3.0 / (1.0 + 2.4 * nf),
                1 => z + 15.0 / (1.0 + 2.5 * nf),
                _ => {
                    let ai = (i - 1) as f64;
                    z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
                }
            };
            let mut pp = 0.0;
            let mut p_prev = 0.0;
            for _ in 0..200 {
                let (p, p1) = laguerre_eval(n, z);
                pp = nf * (p - p1) / z;
                p_prev = p1;
                let dz = p / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            weights[i] = -1.0 / (pp * nf * p_prev);
        }
        Self { nodes, weights }
    }
}

/// `(P_n(z), P_n'(z))`.
fn legendre_eval(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
    }
    let dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
    (p1, dp)
}

/// `(L_n(z), L_{n-1}(z))`.
fn laguerre_eval(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
    }
    (p1, p2)
}

/// Partition of `[0, inf)` into Legendre panels and a Laguerre tail, for
/// integrands weighted by `exp(-u)`.
#[derive(Debug, Clone)]
pub(crate) struct PanelPlan {
    edges: Vec<f64>,
    tail_start: Option<f64>,
}

impl PanelPlan {
    /// `breakpoints` are points where the integrand may lose smoothness;
    /// `fine` is a zone `(lo, hi, width)` subdivided into panels no longer
    /// than `width`. Elsewhere panels are at most 2 units long, the scale of
    /// the weight.
    pub(crate) fn new(breakpoints: &[f64], fine: Option<(f64, f64, f64)>) -> Self {
        const COARSE: f64 = 2.0;
        let mut keys: Vec<f64> = vec![0.0];
        keys.extend(breakpoints.iter().copied().filter(|p| p.is_finite() && *p > 0.0));
        let fine = fine.map(|(lo, hi, w)| (lo.max(0.0), hi.max(0.0), w));
        if let Some((lo, hi, _)) = fine {
            keys.push(lo);
            keys.push(hi);
        }
        let end = keys.iter().copied().fold(0.0, f64::max);
        let capped_end = end.min(NEGLIGIBLE_WEIGHT_U);
        keys.retain(|k| *k <= capped_end);
        keys.push(capped_end);
        keys.sort_by(|a, b| a.total_cmp(b));
        keys.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1.0));

        let mut edges = vec![keys[0]];
        for pair in keys.windows(2) {
            let (p, q) = (pair[0], pair[1]);
            let mid = 0.5 * (p + q);
            let limit = match fine {
                Some((lo, hi, w)) if mid >= lo && mid <= hi => w.min(COARSE),
                _ => COARSE,
            };
            let pieces = ((q - p) / limit).ceil().max(1.0) as usize;
            for k in 1..=pieces {
                edges.push(if k == pieces { q } else { p + (q - p) * k as f64 / pieces as f64 });
            }
        }
        let tail_start = (end < NEGLIGIBLE_WEIGHT_U).then_some(capped_end);
        Self { edges, tail_start }
    }

    /// `int_0^inf f(u) exp(-u) du` with `n` nodes per panel.
    pub(crate) fn integrate<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        legendre: &GaussRule,
        laguerre: &GaussRule,
    ) -> f64 {
        let mut total = 0.0;
        for pair in self.edges.windows(2) {
            total += panel(f, pair[0], pair[1], legendre);
        }
        if let Some(start) = self.tail_start {
            let scale = (-start).exp();
            let tail: f64 = laguerre
                .nodes
                .iter()
                .zip(&laguerre.weights)
                .map(|(&x, &w)| w * f(start + x))
                .sum();
            total += scale * tail;
        }
        total
    }

    /// `int_lo^hi f(u) exp(-u) du` over the panels lying in `[lo, hi]`;
    /// `lo` and `hi` must be edges of the plan (or `hi = inf`).
    pub(crate) fn integrate_range<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        lo: f64,
        hi: f64,
        legendre: &GaussRule,
        laguerre: &GaussRule,
    ) -> f64 {
        let mut total = 0.0;
        for pair in self.edges.windows(2) {
            if pair[0] >= lo && pair[1] <= hi {
                total += panel(f, pair[0], pair[1], legendre);
            }
        }
        if hi.is_infinite() {
            if let Some(start) = self.tail_start {
                let scale = (-start).exp();
                let tail: f64 = laguerre
                    .nodes
                    .iter()
                    .zip(&laguerre.weights)
                    .map(|(&x, &w)| w * f(start + x))
                    .sum();
                total += scale * tail;
            }
        }
        total
    }
}

fn panel<F: Fn(f64) -> f64>(f: &F, p: f64, q: f64, rule: &GaussRule) -> f64 {
    let half = 0.5 * (q - p);
    let mid = 0.5 * (q + p);
    let s: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| {
            let u = mid + half * x;
            w * f(u) * (-u).exp()
        })
        .sum();
    half * s
}

/// Runs `estimate(n)` with doubling `n` until two successive values agree.
pub(crate) fn refine<F>(settings: &QuadratureSettings, mut estimate: F) -> Result<f64>
where
    F: FnMut(&GaussRule, &GaussRule) -> f64,
{
    let settings = settings.validated()?;
    let rules = |n: usize| (GaussRule::legendre(n), GaussRule::laguerre(n.min(MAX_LAGUERRE_NODES)));
    let mut n = settings.node_count;
    let (leg, lag) = rules(n);
    let mut prev = estimate(&leg, &lag);
    let mut change = f64::INFINITY;
    for _ in 0..settings.max_refinements {
        n *= 2;
        let (leg, lag) = rules(n);
        let next = estimate(&leg, &lag);
        change = (next - prev).abs();
        if change <= settings.refinement_tolerance * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureDivergence { refinements: settings.max_refinements, change })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        for n in [16, 32, 64, 256, 512] {
            let rule = GaussRule::legendre(n);
            let w: f64 = rule.weights.iter().sum();
            assert!((w - 2.0).abs() < 1e-13, "n={n} weight sum {w}");
            let x4: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(4)).sum();
            assert!((x4 - 0.4).abs() < 1e-13);
        }
    }

    #[test]
    fn laguerre_integrates_moments() {
        for n in [16, 32, 64, 128] {
            let rule = GaussRule::laguerre(n);
            let mut fact = 1.0;
            for k in 0..8 {
                if k > 0 {
                    fact *= k as f64;
                }
                let m: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x.powi(k))
                    .sum();
                assert!((m / fact - 1.0).abs() < 1e-11, "n={n} k={k} got {m}");
            }
        }
    }

    #[test]
    fn panel_plan_matches_closed_forms() {
        // int_0^inf exp(-u/2) e^-u du = 2/3 and int_0^inf u^2 e^-u du = 2
        let plan = PanelPlan::new(&[3.0], Some((1.0, 2.0, 0.1)));
        let leg = GaussRule::legendre(16);
        let lag = GaussRule::laguerre(16);
        assert!((plan.integrate(&|u: f64| (-0.5 * u).exp(), &leg, &lag) - 2.0 / 3.0).abs() < 1e-12);
        assert!((plan.integrate(&|u: f64| u * u, &leg, &lag) - 2.0).abs() < 1e-12);
        let lower = plan.integrate_range(&|_| 1.0, 0.0, 3.0, &leg, &lag);
        assert!((lower - (1.0 - (-3.0f64).exp())).abs() < 1e-14);
        let upper = plan.integrate_range(&|_| 1.0, 3.0, f64::INFINITY, &leg, &lag);
        assert!((upper - (-3.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn refine_reports_divergence() {
        let s = QuadratureSettings { node_count: 16, refinement_tolerance: 1e-14, max_refinements: 2 };
        let mut k = 0.0;
        let r = refine(&s, |_, _| {
            k += 1.0;
            k
        });
        assert!(matches!(r, Err(Error::QuadratureDivergence { refinements: 2, .. })));
        assert!(QuadratureSettings { node_count: 8, ..s }.validated().is_err());
    }
}
