//! Statistical checks of the samplers against exact laws. Every check uses
//! a fixed seed, so each is deterministic; bounds are at 4 standard errors
//! or the stated chi-square quantile.

use persist_lab::critical::find_tc;
use persist_lab::graphical::{
    apply_killings, build_splitting_tree, color_and_prune, coupled_run, decimate, Color, CouplingConfig,
    DEFAULT_NODE_BUDGET,
};
use persist_lab::mean::{mean_persistent, spectral};
use persist_lab::model::killing_times;
use persist_lab::simulator::{
    estimate_survival, run_epochs, survival_outcomes, SimConfig, ALIVE_DEFINITION,
};
use persist_lab::{KillingSchedule, Rates, Seed};

const REF: Rates = Rates::new(2.0, 1.0, 1.0);

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn poisson_kill_counts_pass_chi_square() {
    // delta = 1 on (0, 5]: counts ~ Poisson(5). Bins 0..=11 and >= 12.
    let schedule = KillingSchedule::poisson(1.0).unwrap();
    let runs = 10_000u64;
    let mut observed = [0u64; 13];
    for i in 0..runs {
        let n = killing_times(&schedule, 5.0, &mut Seed(71).replicate(i)).unwrap().len();
        observed[n.min(12)] += 1;
    }
    let mut pmf = [0.0; 13];
    let mut term = (-5.0f64).exp();
    for (k, p) in pmf.iter_mut().enumerate().take(12) {
        *p = term;
        term *= 5.0 / (k + 1) as f64;
    }
    pmf[12] = 1.0 - pmf[..12].iter().sum::<f64>();
    let chi2: f64 = observed
        .iter()
        .zip(pmf)
        .map(|(&o, p)| {
            let e = p * runs as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    // 0.999 quantile of chi-square with 12 degrees of freedom.
    assert!(chi2 < 32.909, "chi2 = {chi2}");
}

#[test]
fn offspring_is_additive_over_initial_cells() {
    // Z_1 from three persistent cells has mean 3 y(T).
    let period = 1.0;
    let schedule = KillingSchedule::deterministic(period).unwrap();
    let z: Vec<f64> = (0..20_000)
        .map(|i| {
            let trace = run_epochs(&REF, &schedule, 3, 1, &mut Seed(72).replicate(i), 1_000_000).unwrap();
            trace.z_at(0).unwrap() as f64
        })
        .collect();
    let (m, se) = mean_se(&z);
    let want = 3.0 * mean_persistent(&spectral(REF).unwrap(), period).unwrap();
    assert!((m - want).abs() <= 4.0 * se, "{m} vs {want} (se {se})");
}

#[test]
fn survival_increases_with_period() {
    let tc = find_tc(REF, 1e-12).unwrap().value;
    let cfg = SimConfig { population_cap: 1_000 };
    let p = |f: f64| {
        estimate_survival(REF, KillingSchedule::deterministic(f * tc).unwrap(), 2_000, 60, Seed(73), &cfg)
            .unwrap()
            .p_hat
    };
    let (sub, near, sup) = (p(0.5), p(1.25), p(2.0));
    assert_eq!(sub, 0.0);
    assert!(sub <= near && near < sup, "{sub} {near} {sup}");
}

#[test]
fn subcritical_period_dies_out() {
    let tc = find_tc(REF, 1e-12).unwrap().value;
    let cfg = SimConfig::default();
    let est = estimate_survival(REF, KillingSchedule::deterministic(0.5 * tc).unwrap(), 1_000, 100, Seed(74), &cfg)
        .unwrap();
    assert!(est.p_hat <= 0.005);
    assert_eq!(est.alive_definition, ALIVE_DEFINITION);
    assert_eq!(est.epochs, 100);
}

#[test]
fn poisson_killing_regimes() {
    let cfg = SimConfig { population_cap: 1_000 };
    let low = estimate_survival(REF, KillingSchedule::poisson(0.5).unwrap(), 2_000, 100, Seed(75), &cfg).unwrap();
    // Generating-function iteration gives survival near 0.56 at this intensity.
    assert!(low.p_hat > 0.5 && low.p_hat < 0.62, "{}", low.p_hat);
    let high = estimate_survival(REF, KillingSchedule::poisson(20.0).unwrap(), 2_000, 200, Seed(76), &cfg).unwrap();
    assert!(high.p_hat <= 0.001, "{}", high.p_hat);
}

#[test]
fn outcomes_follow_replicate_streams() {
    // Parallel evaluation must reproduce an index-ordered serial loop.
    let schedule = KillingSchedule::poisson(1.0).unwrap();
    let cfg = SimConfig { population_cap: 10_000 };
    let seed = Seed(77);
    let outcomes = survival_outcomes(REF, schedule, 500, 30, 1, seed, &cfg).unwrap();
    for (i, o) in outcomes.iter().enumerate() {
        let trace = run_epochs(&REF, &schedule, 1, 30, &mut seed.replicate(i as u64), cfg.population_cap).unwrap();
        assert_eq!(o.index, i as u64);
        assert_eq!(o.survived, trace.alive_after(30));
        assert_eq!(o.extinct_at, trace.extinct_at);
    }
    assert_eq!(outcomes, survival_outcomes(REF, schedule, 500, 30, 1, seed, &cfg).unwrap());
}

#[test]
fn yule_tree_grows_exponentially() {
    let (lambda, t) = (1.0, 2.0);
    let counts: Vec<f64> = (0..20_000)
        .map(|i| {
            let tree = build_splitting_tree(lambda, t, &mut Seed(78).replicate(i), DEFAULT_NODE_BUDGET).unwrap();
            tree.alive_count(t) as f64
        })
        .collect();
    let (m, se) = mean_se(&counts);
    let want = (lambda * t).exp();
    assert!((m - want).abs() <= 4.0 * se, "{m} vs {want}");
}

#[test]
fn killing_at_one_keeps_the_persistent_mean() {
    // Initial persistent root, single kill at t = 1: red count right after
    // the kill has mean y(1), white count is zero.
    let mut reds = Vec::with_capacity(100_000);
    for i in 0..100_000 {
        let mut rng = Seed(79).replicate(i);
        let tree = build_splitting_tree(REF.lambda, 1.5, &mut rng, DEFAULT_NODE_BUDGET).unwrap();
        let ct = color_and_prune(tree, REF.a, REF.b, Color::Persistent, &mut rng).unwrap();
        let killed = apply_killings(ct, &[1.0]).unwrap();
        let (white, red) = killed.counts_at(1.0);
        assert_eq!(white, 0);
        reds.push(red as f64);
    }
    let (m, se) = mean_se(&reds);
    let y1 = mean_persistent(&spectral(REF).unwrap(), 1.0).unwrap();
    assert!((m - y1).abs() <= 4.0 * se, "{m} vs {y1}");
}

#[test]
fn decimation_keeps_the_right_fraction() {
    let points: Vec<f64> = (0..100_000).map(|i| i as f64).collect();
    let keep = 0.1;
    let kept = decimate(&points, keep, &mut Seed(80).replicate(0)).unwrap().len() as f64;
    let n = points.len() as f64;
    let se = (n * keep * (1.0 - keep)).sqrt();
    assert!((kept - n * keep).abs() <= 4.0 * se, "{kept}");
}

#[test]
fn coupling_never_breaks_containment() {
    let cfg = CouplingConfig::default();
    for (k, (delta, high)) in [(0.3, 3.0), (1.0, 1.5), (2.0, 20.0), (0.8, 0.9)].into_iter().enumerate() {
        for i in 0..300 {
            let o = coupled_run(REF, delta, high, 10.0, &cfg, &mut Seed(81 + k as u64).replicate(i)).unwrap();
            assert!(o.containment_ok);
            assert!(!o.alive_high || o.alive_low);
        }
    }
}

#[test]
fn nearly_equal_intensities_agree() {
    let cfg = CouplingConfig::default();
    let reps = 2_000u64;
    let (mut low, mut high) = (0.0, 0.0);
    for i in 0..reps {
        let o = coupled_run(REF, 1.0, 1.0 + 1e-9, 10.0, &cfg, &mut Seed(85).replicate(i)).unwrap();
        low += f64::from(u8::from(o.alive_low));
        high += f64::from(u8::from(o.alive_high));
    }
    let n = reps as f64;
    let (pl, ph) = (low / n, high / n);
    let se = ((pl * (1.0 - pl) + ph * (1.0 - ph)) / n).sqrt().max(1.0 / n);
    assert!((pl - ph).abs() <= 4.0 * se, "{pl} vs {ph}");
}
