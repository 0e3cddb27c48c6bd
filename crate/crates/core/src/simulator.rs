//! Exact event-driven simulation of the killed two-type process.
//!
//! Between killings the population is a continuous-time Markov chain:
//! with `n1` normal and `n2` persistent cells, births fire at rate
//! `lambda n1`, normal -> persistent switches at `a n1` and
//! persistent -> normal switches at `b n2`. A killing sets `n1 = 0`.
//!
//! The persistent counts right after successive killings form a
//! Galton-Watson process (periodic killing) or a branching process in an
//! i.i.d. environment (exponential gaps). Survival is estimated by the
//! finite-depth proxy "still alive after `max_epochs` killings"; a
//! population cap short-circuits runaway replicates to "alive".

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    exponential, validate_rates, KillingSchedule, PopulationState, RateContext, Rates, Seed,
};

/// Default population cap for the simulators.
pub const DEFAULT_POPULATION_CAP: u64 = 100_000_000;

const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    /// A replicate whose total population exceeds this is declared alive.
    pub population_cap: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { population_cap: DEFAULT_POPULATION_CAP }
    }
}

/// Advances the chain by `duration` without killing.
///
/// Each event consumes two draws in a fixed order: the waiting time, then
/// the event type.
pub fn run_interval<R: Rng + ?Sized>(
    state: PopulationState,
    r: &Rates,
    duration: f64,
    rng: &mut R,
    cap: u64,
) -> Result<PopulationState> {
    if !(duration >= 0.0) {
        return Err(Error::InvalidArgument(format!("duration must be >= 0, got {duration}")));
    }
    let PopulationState { mut n1, mut n2, t } = state;
    let end = t + duration;
    let mut now = t;
    let grow = r.lambda;
    let leave = r.lambda + r.a;
    loop {
        let total = leave * n1 as f64 + r.b * n2 as f64;
        if total <= 0.0 {
            break;
        }
        now += exponential(rng, total);
        if now >= end {
            break;
        }
        let pick = rng.random::<f64>() * total;
        let n1f = n1 as f64;
        if pick < grow * n1f {
            n1 += 1;
            if n1 + n2 > cap {
                return Err(Error::PopulationCapExceeded { cap });
            }
        } else if pick < leave * n1f {
            n1 -= 1;
            n2 += 1;
        } else if n2 > 0 {
            n2 -= 1;
            n1 += 1;
        }
    }
    Ok(PopulationState { n1, n2, t: end })
}

/// A killing: every normal cell dies, persistent cells are untouched.
pub fn apply_kill(state: PopulationState) -> PopulationState {
    PopulationState { n1: 0, ..state }
}

/// One offspring draw: persistent count at the first killing `T`, starting
/// from a single persistent cell.
pub fn sample_offspring<R: Rng + ?Sized>(r: &Rates, period: f64, rng: &mut R, cap: u64) -> Result<u64> {
    if !(period > 0.0) {
        return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
    }
    let end = run_interval(PopulationState::new(0, 1), r, period, rng, cap)?;
    Ok(apply_kill(end).n2)
}

/// Persistent counts right after successive killings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochTrace {
    /// `z[k]` is the persistent count right after the `(k+1)`-th killing
    /// following the start. The trace stops at the first zero.
    pub z: Vec<u64>,
    /// Index in `z` of the first zero, if any.
    pub extinct_at: Option<usize>,
    /// Realized inter-kill durations (exponential schedule only).
    pub schedule_draws: Vec<f64>,
    /// The population cap was hit; the replicate counts as alive.
    pub capped: bool,
}

impl EpochTrace {
    /// `Z_k`, zero after extinction. `None` for epochs never reached.
    pub fn z_at(&self, k: usize) -> Option<u64> {
        match (self.z.get(k), self.extinct_at) {
            (Some(&z), _) => Some(z),
            (None, Some(_)) => Some(0),
            (None, None) => None,
        }
    }

    /// Alive after `epochs` killings (or capped on the way).
    pub fn alive_after(&self, epochs: usize) -> bool {
        if self.extinct_at.is_some() {
            return false;
        }
        self.capped || self.z.len() >= epochs
    }
}

/// Runs `max_epochs` kill cycles from `init_n2` persistent cells, starting
/// just after a killing.
pub fn run_epochs<R: Rng + ?Sized>(
    r: &Rates,
    schedule: &KillingSchedule,
    init_n2: u64,
    max_epochs: usize,
    rng: &mut R,
    cap: u64,
) -> Result<EpochTrace> {
    if init_n2 == 0 {
        return Err(Error::InvalidArgument("init_n2 must be at least 1".into()));
    }
    let mut trace = EpochTrace { z: Vec::new(), extinct_at: None, schedule_draws: Vec::new(), capped: false };
    let random = matches!(schedule, KillingSchedule::PoissonIntensity { .. });
    let mut state = PopulationState::new(0, init_n2);
    for k in 0..max_epochs {
        let gap = schedule.next_gap(rng);
        if random {
            trace.schedule_draws.push(gap);
        }
        state = match run_interval(state, r, gap, rng, cap) {
            Ok(s) => apply_kill(s),
            Err(Error::PopulationCapExceeded { .. }) => {
                trace.capped = true;
                break;
            }
            Err(e) => return Err(e),
        };
        trace.z.push(state.n2);
        if state.n2 == 0 {
            trace.extinct_at = Some(k);
            break;
        }
    }
    Ok(trace)
}

/// Maps `f` over replicate indices `0..reps`, in parallel when enabled.
/// Output order is the index order either way.
pub(crate) fn map_replicates<T, F>(reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..reps).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..reps).map(f).collect()
    }
}

fn check_reps(reps: u64) -> Result<()> {
    if reps < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 replicates, got {reps}")));
    }
    Ok(())
}

/// Sample mean and standard error of `reps` offspring draws.
pub fn estimate_mean_offspring(
    r: Rates,
    period: f64,
    reps: u64,
    seed: Seed,
    config: &SimConfig,
) -> Result<(f64, f64)> {
    let r = validate_rates(r, RateContext::Solver)?;
    check_reps(reps)?;
    let draws = map_replicates(reps, |i| {
        let mut rng = seed.replicate(i);
        sample_offspring(&r, period, &mut rng, config.population_cap)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(mean_and_stderr(draws.iter().map(|&z| z as f64)))
}

pub(crate) fn mean_and_stderr<I: ExactSizeIterator<Item = f64> + Clone>(xs: I) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Outcome of one survival replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateOutcome {
    pub index: u64,
    pub survived: bool,
    pub extinct_at: Option<usize>,
    pub epochs_run: usize,
    pub final_z: u64,
    pub capped: bool,
}

/// Monte Carlo survival estimate with its censoring metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub reps: u64,
    pub survivors: u64,
    /// Censoring depth.
    pub epochs: usize,
    /// Replicates classified alive because they hit the population cap.
    pub capped: u64,
    pub population_cap: u64,
    pub alive_definition: &'static str,
}

pub const ALIVE_DEFINITION: &str = "Z_epochs >= 1";

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Per-replicate survival outcomes, in replicate order.
pub fn survival_outcomes(
    r: Rates,
    schedule: KillingSchedule,
    reps: u64,
    max_epochs: usize,
    init_n2: u64,
    seed: Seed,
    config: &SimConfig,
) -> Result<Vec<ReplicateOutcome>> {
    let r = validate_rates(r, RateContext::Solver)?;
    let schedule = schedule.validated()?;
    check_reps(reps)?;
    if max_epochs == 0 {
        return Err(Error::InvalidArgument("max_epochs must be at least 1".into()));
    }
    map_replicates(reps, |i| {
        let mut rng = seed.replicate(i);
        let trace = run_epochs(&r, &schedule, init_n2, max_epochs, &mut rng, config.population_cap)?;
        Ok(ReplicateOutcome {
            index: i,
            survived: trace.alive_after(max_epochs),
            extinct_at: trace.extinct_at,
            epochs_run: trace.z.len(),
            final_z: trace.z.last().copied().unwrap_or(init_n2),
            capped: trace.capped,
        })
    })
    .into_iter()
    .collect()
}

pub fn summarize_survival(outcomes: &[ReplicateOutcome], epochs: usize, config: &SimConfig) -> SurvivalEstimate {
    let reps = outcomes.len() as u64;
    let survivors = outcomes.iter().filter(|o| o.survived).count() as u64;
    let capped = outcomes.iter().filter(|o| o.capped).count() as u64;
    let p_hat = survivors as f64 / reps as f64;
    SurvivalEstimate {
        p_hat,
        stderr: (p_hat * (1.0 - p_hat) / reps as f64).sqrt(),
        ci95: wilson_interval(survivors, reps),
        reps,
        survivors,
        epochs,
        capped,
        population_cap: config.population_cap,
        alive_definition: ALIVE_DEFINITION,
    }
}

/// Fraction of replicates alive after `max_epochs` killings, starting from
/// a single persistent cell.
pub fn estimate_survival(
    r: Rates,
    schedule: KillingSchedule,
    reps: u64,
    max_epochs: usize,
    seed: Seed,
    config: &SimConfig,
) -> Result<SurvivalEstimate> {
    let outcomes = survival_outcomes(r, schedule, reps, max_epochs, 1, seed, config)?;
    Ok(summarize_survival(&outcomes, max_epochs, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF: Rates = Rates::new(2.0, 1.0, 1.0);

    #[test]
    fn empty_state_is_absorbing() {
        let mut rng = Seed(1).replicate(0);
        let s = run_interval(PopulationState::new(0, 0), &REF, 5.0, &mut rng, 100).unwrap();
        assert_eq!((s.n1, s.n2), (0, 0));
        assert_eq!(s.t, 5.0);
    }

    #[test]
    fn kill_is_idempotent() {
        let s = PopulationState { n1: 5, n2: 3, t: 1.5 };
        let k = apply_kill(s);
        assert_eq!((k.n1, k.n2, k.t), (0, 3, 1.5));
        assert_eq!(apply_kill(k), k);
        assert_eq!(apply_kill(PopulationState::new(0, 0)), PopulationState::new(0, 0));
    }

    #[test]
    fn near_zero_switching_keeps_single_persistent() {
        let r = Rates::new(2.0, 1e-12, 1.0);
        for i in 0..200 {
            let mut rng = Seed(3).replicate(i);
            let s = run_interval(PopulationState::new(0, 1), &r, 3.0, &mut rng, 1_000_000).unwrap();
            assert!(s.n2 <= 1);
            let z = sample_offspring(&r, 1.0, &mut rng, 1_000_000).unwrap();
            assert!(z <= 1);
        }
    }

    #[test]
    fn cap_is_reported() {
        let mut rng = Seed(3).replicate(0);
        let r = run_interval(PopulationState::new(10, 0), &REF, 50.0, &mut rng, 1000);
        assert_eq!(r, Err(Error::PopulationCapExceeded { cap: 1000 }));
    }

    #[test]
    fn epochs_stop_at_extinction() {
        let s = KillingSchedule::deterministic(0.2).unwrap();
        for i in 0..50 {
            let mut rng = Seed(9).replicate(i);
            let tr = run_epochs(&REF, &s, 1, 500, &mut rng, 1_000_000).unwrap();
            if let Some(k) = tr.extinct_at {
                assert_eq!(k + 1, tr.z.len());
                assert_eq!(tr.z[k], 0);
                assert_eq!(tr.z_at(k + 10), Some(0));
                assert!(tr.z[..k].iter().all(|&z| z > 0));
            }
            assert!(tr.schedule_draws.is_empty());
        }
        let mut rng = Seed(9).replicate(0);
        assert!(run_epochs(&REF, &s, 0, 5, &mut rng, 10).is_err());
    }

    #[test]
    fn poisson_epochs_record_draws() {
        let s = KillingSchedule::poisson(20.0).unwrap();
        let mut rng = Seed(2).replicate(1);
        let tr = run_epochs(&REF, &s, 1, 30, &mut rng, 1_000_000).unwrap();
        assert!(!tr.schedule_draws.is_empty());
        assert!(tr.schedule_draws.len() >= tr.z.len());
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.005);
    }

    #[test]
    fn mean_offspring_is_reproducible() {
        let cfg = SimConfig::default();
        let a = estimate_mean_offspring(REF, 1.0, 500, Seed(11), &cfg).unwrap();
        let b = estimate_mean_offspring(REF, 1.0, 500, Seed(11), &cfg).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert!(estimate_mean_offspring(REF, 1.0, 10, Seed(11), &cfg).is_err());
    }
}
