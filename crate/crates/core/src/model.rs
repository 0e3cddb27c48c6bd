//! Shared domain types: switching/birth rates, killing schedules,
//! population state and the replicate seeding contract.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Birth rate of normal cells and the two phenotype switch rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// Birth rate of normal (state-1) bacteria.
    pub lambda: f64,
    /// Switch rate normal -> persistent.
    pub a: f64,
    /// Switch rate persistent -> normal.
    pub b: f64,
}

/// Which positivity contract a caller needs.
///
/// `Analytic` admits `a = 0`, where the mean dynamics collapse to
/// `y(t) = exp(-b t)`; it exists for closed-form cross checks only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateContext {
    Solver,
    Analytic,
}

impl Rates {
    pub const fn new(lambda: f64, a: f64, b: f64) -> Self {
        Self { lambda, a, b }
    }

    pub fn validated(self, context: RateContext) -> Result<Self> {
        validate_rates(self, context)
    }

    /// `true` when the trace of the mean-dynamics matrix vanishes (`lambda = a + b`).
    pub fn is_balanced(&self) -> bool {
        (self.lambda - self.a - self.b).abs() <= 1e-12 * self.lambda
    }
}

pub fn validate_rates(r: Rates, context: RateContext) -> Result<Rates> {
    for (name, v) in [("lambda", r.lambda), ("a", r.a), ("b", r.b)] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    if r.lambda <= 0.0 {
        return Err(Error::NonPositiveRate("lambda"));
    }
    match context {
        RateContext::Solver if r.a <= 0.0 => return Err(Error::NonPositiveRate("a")),
        RateContext::Analytic if r.a < 0.0 => return Err(Error::NonPositiveRate("a")),
        _ => {}
    }
    if r.b <= 0.0 {
        return Err(Error::NonPositiveRate("b"));
    }
    Ok(r)
}

/// When mass killings of normal bacteria happen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KillingSchedule {
    /// Killings at `T, 2T, 3T, ...`.
    DeterministicPeriod { period: f64 },
    /// Killings at the points of a Poisson process of intensity `delta`.
    PoissonIntensity { delta: f64 },
}

impl KillingSchedule {
    pub fn deterministic(period: f64) -> Result<Self> {
        Self::DeterministicPeriod { period }.validated()
    }

    pub fn poisson(delta: f64) -> Result<Self> {
        Self::PoissonIntensity { delta }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let (name, v) = match self {
            Self::DeterministicPeriod { period } => ("period", period),
            Self::PoissonIntensity { delta } => ("delta", delta),
        };
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
        if v <= 0.0 {
            return Err(Error::NonPositiveRate(name));
        }
        Ok(self)
    }

    /// Short tag used in CSV output.
    pub fn tag(&self) -> &'static str {
        match self {
            Self::DeterministicPeriod { .. } => "deterministic",
            Self::PoissonIntensity { .. } => "poisson",
        }
    }

    /// The period `T` or the intensity `delta`.
    pub fn parameter(&self) -> f64 {
        match *self {
            Self::DeterministicPeriod { period } => period,
            Self::PoissonIntensity { delta } => delta,
        }
    }

    /// Duration until the next killing. The deterministic variant draws nothing.
    pub fn next_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::DeterministicPeriod { period } => period,
            Self::PoissonIntensity { delta } => exponential(rng, delta),
        }
    }
}

/// Materializes the killing times in `(0, horizon]`.
///
/// Simulations draw gaps lazily through [`KillingSchedule::next_gap`]; this
/// is the diagnostic form.
pub fn killing_times<R: Rng + ?Sized>(
    schedule: &KillingSchedule,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    schedule.validated()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "horizon must be finite and positive, got {horizon}"
        )));
    }
    let mut times = Vec::new();
    match *schedule {
        KillingSchedule::DeterministicPeriod { period } => {
            let mut k = 1u64;
            loop {
                let t = k as f64 * period;
                if t > horizon {
                    break;
                }
                times.push(t);
                k += 1;
            }
        }
        KillingSchedule::PoissonIntensity { delta } => {
            let mut t = 0.0;
            loop {
                t += exponential(rng, delta);
                if t > horizon {
                    break;
                }
                times.push(t);
            }
        }
    }
    Ok(times)
}

/// Exponential variate with the given rate.
#[inline]
pub(crate) fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

/// Counts of normal (`n1`) and persistent (`n2`) bacteria at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    pub n1: u64,
    pub n2: u64,
    pub t: f64,
}

impl PopulationState {
    pub fn new(n1: u64, n2: u64) -> Self {
        Self { n1, n2, t: 0.0 }
    }

    pub fn total(&self) -> u64 {
        self.n1 + self.n2
    }

    pub fn is_extinct(&self) -> bool {
        self.n1 == 0 && self.n2 == 0
    }
}

/// Random stream used by a single replicate.
pub type ReplicateRng = ChaCha8Rng;

/// Master seed of a Monte Carlo run.
///
/// Replicate `i` draws from the ChaCha8 stream keyed by
/// `seed_from_u64(master)` with stream id `i`. Streams are independent of
/// evaluation order, so serial and parallel runs agree bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn replicate(&self, index: u64) -> ReplicateRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }
}

impl Default for Seed {
    fn default() -> Self {
        Seed(0x5eed_2009)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_positive_rates() {
        let r = Rates::new(2.0, 1.0, 1.0);
        assert_eq!(validate_rates(r, RateContext::Solver), Ok(r));
    }

    #[test]
    fn zero_a_rejected_by_solver_accepted_by_analytic() {
        let r = Rates::new(2.0, 0.0, 1.0);
        assert_eq!(
            validate_rates(r, RateContext::Solver),
            Err(Error::NonPositiveRate("a"))
        );
        assert_eq!(validate_rates(r, RateContext::Analytic), Ok(r));
    }

    #[test]
    fn non_finite_and_negative_rates() {
        assert_eq!(
            validate_rates(Rates::new(f64::NAN, 1.0, 1.0), RateContext::Analytic),
            Err(Error::NonFinite("lambda"))
        );
        assert_eq!(
            validate_rates(Rates::new(1.0, 1.0, f64::INFINITY), RateContext::Solver),
            Err(Error::NonFinite("b"))
        );
        assert_eq!(
            validate_rates(Rates::new(1.0, -1.0, 1.0), RateContext::Analytic),
            Err(Error::NonPositiveRate("a"))
        );
        assert_eq!(
            validate_rates(Rates::new(1.0, 1.0, 0.0), RateContext::Analytic),
            Err(Error::NonPositiveRate("b"))
        );
        assert_eq!(
            validate_rates(Rates::new(0.0, 1.0, 1.0), RateContext::Solver),
            Err(Error::NonPositiveRate("lambda"))
        );
    }

    #[test]
    fn deterministic_killing_times() {
        let mut rng = Seed(1).replicate(0);
        let s = KillingSchedule::deterministic(1.0).unwrap();
        assert_eq!(killing_times(&s, 3.5, &mut rng).unwrap(), vec![1.0, 2.0, 3.0]);
        let s = KillingSchedule::deterministic(5.0).unwrap();
        assert!(killing_times(&s, 4.0, &mut rng).unwrap().is_empty());
        assert!(killing_times(&s, 0.0, &mut rng).is_err());
    }

    #[test]
    fn poisson_mean_gap() {
        let mut rng = Seed(7).replicate(3);
        let s = KillingSchedule::poisson(2.0).unwrap();
        let times = killing_times(&s, 1e6, &mut rng).unwrap();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(times[0] > 0.0 && *times.last().unwrap() <= 1e6);
        let mut prev = 0.0;
        let gaps: Vec<f64> = times
            .iter()
            .map(|&t| {
                let g = t - prev;
                prev = t;
                g
            })
            .collect();
        let n = gaps.len() as f64;
        let mean = gaps.iter().sum::<f64>() / n;
        let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!((mean - 0.5).abs() < 4.0 * se, "mean gap {mean}, se {se}");
    }

    #[test]
    fn schedule_validation() {
        assert!(KillingSchedule::deterministic(0.0).is_err());
        assert!(KillingSchedule::poisson(-1.0).is_err());
        assert!(KillingSchedule::poisson(f64::NAN).is_err());
    }

    #[test]
    fn replicate_streams_are_reproducible_and_distinct() {
        let seed = Seed(42);
        let mut r1 = seed.replicate(5);
        let mut r2 = seed.replicate(5);
        let mut r3 = seed.replicate(6);
        let x1: u64 = r1.random();
        assert_eq!(x1, r2.random::<u64>());
        assert_ne!(x1, r3.random::<u64>());
    }
}
