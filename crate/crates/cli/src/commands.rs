use persist_lab::critical::{
    delta_c_lower_bound, find_delta_c, find_tc, large_delta_upper_bound, m_prime, m_prime_envelope, DEFAULT_DELTA_C_TOL,
    DEFAULT_TC_TOL,
};
use persist_lab::graphical::{coupled_run, CouplingConfig};
use persist_lab::mean::spectral;
use persist_lab::quadrature::QuadratureSettings;
use persist_lab::simulator::{summarize_survival, survival_outcomes, SimConfig};
use persist_lab::{KillingSchedule, RateContext, Rates, Seed};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{
    AnalyzeArgs, Common, CouplingArgs, DeltaCArgs, Format, MprimeArgs, SurvivalArgs, TcGridArgs, TcLambdaArgs,
};
use crate::error::CliError;
use crate::output::{emit, num, write_text, Header, Table};

/// Invocation facts echoed into every output.
pub struct Context {
    pub argv: Vec<String>,
    pub threads: usize,
}

impl Context {
    fn header(&self, command: &'static str, common: &Common, config: Value) -> Header {
        let mut config = config;
        config["threads"] = json!(self.threads);
        config["format"] = json!(common.format);
        Header { command, argv: self.argv.clone(), seed: seed(common).0, config }
    }
}

fn seed(common: &Common) -> Seed {
    common.seed.map(Seed).unwrap_or_default()
}

fn rates(common: &Common, default: (f64, f64, f64)) -> Result<Rates, CliError> {
    let r = Rates::new(
        common.lambda.unwrap_or(default.0),
        common.a.unwrap_or(default.1),
        common.b.unwrap_or(default.2),
    );
    Ok(r.validated(RateContext::Solver)?)
}

fn quad(common: &Common) -> Result<QuadratureSettings, CliError> {
    let q = QuadratureSettings { node_count: common.quad_nodes, ..QuadratureSettings::default() };
    Ok(q.validated()?)
}

fn tol(common: &Common, default: f64) -> Result<f64, CliError> {
    match common.tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(CliError::Usage(format!("--tol must be positive, got {t}"))),
        Some(t) => Ok(t),
        None => Ok(default),
    }
}

/// `n` log-spaced points from `lo` to `hi`, endpoints exact.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(CliError::Usage(format!("log range needs 0 < min <= max, got [{lo}, {hi}]")));
    }
    if n == 0 {
        return Err(CliError::Usage("need at least one grid point".into()));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            _ if i + 1 == n => hi,
            _ => (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

fn rates_json(r: Rates) -> Value {
    json!({ "lambda": r.lambda, "a": r.a, "b": r.b })
}

pub fn analyze(args: &AnalyzeArgs, ctx: &Context) -> Result<(), CliError> {
    let c = &args.common;
    let r = rates(c, (2.0, 1.0, 1.0))?;
    let tc_tol = tol(c, DEFAULT_TC_TOL)?;
    let q = quad(c)?;
    let sd = spectral(r)?;
    let tc = find_tc(r, tc_tol)?;
    let mut report = json!({
        "lambda": r.lambda,
        "a": r.a,
        "b": r.b,
        "disc": sd.disc,
        "nu1": sd.nu1,
        "nu2": sd.nu2,
        "c1": sd.c1,
        "c2": sd.c2,
        "t_star": sd.min_time(),
        "tc": tc.value,
        "tc_residual": tc.residual,
        "curvature_constant": sd.curvature_constant(),
        "delta_c_lower_bound": delta_c_lower_bound(r)?,
    });
    if args.delta_c {
        let dc = find_delta_c(r, DEFAULT_DELTA_C_TOL, &q)?;
        report["delta_c"] = json!(dc.value);
        report["delta_c_bracket"] = json!([dc.bracket.0, dc.bracket.1]);
        report["delta_c_multiple_sign_changes"] = json!(dc.multiple_sign_changes);
    }
    let header = ctx.header("analyze", c, json!({ "rates": rates_json(r), "tol": tc_tol, "delta_c": args.delta_c }));
    let doc = json!({ "version": crate::output::VERSION, "header": header, "report": report });
    let mut text = serde_json::to_string_pretty(&doc).expect("values serialize");
    text.push('\n');
    write_text(c.out.as_deref(), &text)
}

pub fn tc_grid(args: &TcGridArgs, ctx: &Context) -> Result<(), CliError> {
    let c = &args.common;
    let lambda = c.lambda.unwrap_or(2.0);
    let tc_tol = tol(c, DEFAULT_TC_TOL)?;
    let a_axis = log_space(args.a_min, args.a_max, args.points)?;
    let b_axis = log_space(args.b_min, args.b_max, args.points)?;
    let cells: Vec<(f64, f64)> = a_axis.iter().flat_map(|&a| b_axis.iter().map(move |&b| (a, b))).collect();
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(a, b)| find_tc(Rates::new(lambda, a, b), tc_tol).map(|res| res.value))
        .collect();

    let failed = results.iter().filter(|r| r.is_err()).count();
    let mut table = if failed > 0 {
        Table::new(&["lambda", "a", "b", "tc", "error"])
    } else {
        Table::new(&["lambda", "a", "b", "tc"])
    };
    for (&(a, b), res) in cells.iter().zip(&results) {
        let mut row = vec![num(lambda), num(a), num(b)];
        match res {
            Ok(tc) => row.push(num(*tc)),
            Err(_) => row.push(String::new()),
        }
        if failed > 0 {
            row.push(res.as_ref().err().map(|e| e.to_string()).unwrap_or_default());
        }
        table.push(row);
    }
    let ok: Vec<f64> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    if !ok.is_empty() {
        let min = ok.iter().copied().fold(f64::INFINITY, f64::min);
        let max = ok.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        table.footer.push(format!("tc_min: {}", num(min)));
        table.footer.push(format!("tc_max: {}", num(max)));
        table.footer.push(format!("max_over_min: {}", num(max / min)));
    }
    table.footer.push(format!("failed_cells: {failed}"));

    let config = json!({
        "lambda": lambda,
        "a_range": [args.a_min, args.a_max],
        "b_range": [args.b_min, args.b_max],
        "points": args.points,
        "spacing": "log",
        "tol": tc_tol,
    });
    emit(&table, &ctx.header("tc-grid", c, config), c.format, c.out.as_deref())?;
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} grid cells failed")));
    }
    Ok(())
}

pub fn tc_lambda(args: &TcLambdaArgs, ctx: &Context) -> Result<(), CliError> {
    let c = &args.common;
    let (a, b) = (c.a.unwrap_or(1e-6), c.b.unwrap_or(1e-3));
    let tc_tol = tol(c, DEFAULT_TC_TOL)?;
    let lambdas = log_space(args.lambda_min, args.lambda_max, args.points)?;
    let results = lambdas
        .par_iter()
        .map(|&l| find_tc(Rates::new(l, a, b), tc_tol).map(|res| res.value))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["lambda", "tc"]);
    for (&l, tc) in lambdas.iter().zip(&results) {
        table.push(vec![num(l), num(*tc)]);
    }
    let config = json!({
        "a": a,
        "b": b,
        "lambda_range": [args.lambda_min, args.lambda_max],
        "points": args.points,
        "spacing": "log",
        "tol": tc_tol,
    });
    emit(&table, &ctx.header("tc-lambda", c, config), c.format, c.out.as_deref())
}

pub fn mprime(args: &MprimeArgs, ctx: &Context) -> Result<(), CliError> {
    let c = &args.common;
    let r = rates(c, (2.0, 1.0, 1.0))?;
    let q = quad(c)?;
    let sd = spectral(r)?;
    let deltas = log_space(args.delta_min, args.delta_max, args.points)?;
    let values = deltas.par_iter().map(|&d| m_prime(r, d, &q)).collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["delta", "m_prime", "lower_envelope", "upper_envelope"]);
    for (&d, &m) in deltas.iter().zip(&values) {
        let (lo, hi) = m_prime_envelope(&sd, d);
        table.push(vec![num(d), num(m), num(lo), num(hi)]);
    }
    let changes = values.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
    table.footer.push(format!("sign_changes: {changes}"));
    if let Some(bound) = large_delta_upper_bound(&sd, args.delta_max) {
        table.footer.push(format!("large_delta_bound_at_max: {}", num(bound)));
    }
    let config = json!({
        "rates": rates_json(r),
        "delta_range": [args.delta_min, args.delta_max],
        "points": args.points,
        "spacing": "log",
        "quad": q,
    });
    emit(&table, &ctx.header("mprime", c, config), c.format, c.out.as_deref())
}

pub fn delta_c(args: &DeltaCArgs, ctx: &Context) -> Result<(), CliError> {
    let c = &args.common;
    let r = rates(c, (2.0, 1.0, 1.0))?;
    let q = quad(c)?;
    let t = tol(c, DEFAULT_DELTA_C_TOL)?;
    let res = find_delta_c(r, t, &q)?;
    let mut table = Table::new(&[
        "lambda",
        "a",
        "b",
        "delta_c",
        "lower_bound",
        "bracket_lo",
        "bracket_hi",
        "residual",
        "iterations",
        "multiple_sign_changes",
    ]);
    table.push(vec![
        num(r.lambda),
        num(r.a),
        num(r.b),
        num(res.value),
        num(delta_c_lower_bound(r)?),
        num(res.bracket.0),
        num(res.bracket.1),
        num(res.residual),
        res.iterations.to_string(),
        res.multiple_sign_changes.to_string(),
    ]);
    let config = json!({ "rates": rates_json(r), "tol": t, "quad": q });
    emit(&table, &ctx.header("delta-c", c, config), c.format, c.out.as_deref())
}

pub fn survival(args: &SurvivalArgs, ctx: &Context) -> Result<(), CliError> {
    let c = &args.common;
    let r = rates(c, (2.0, 1.0, 1.0))?;
    let schedule = match (args.period, args.tc_factor, args.delta) {
        (Some(p), None, None) => KillingSchedule::deterministic(p)?,
        (None, Some(f), None) => {
            let tc = find_tc(r, tol(c, DEFAULT_TC_TOL)?)?.value;
            KillingSchedule::deterministic(f * tc)?
        }
        (None, None, Some(d)) => KillingSchedule::poisson(d)?,
        _ => return Err(CliError::Usage("give exactly one of --period, --tc-factor, --delta".into())),
    };
    if c.format == Format::SvgCsv {
        return Err(CliError::Usage("survival output cannot be plotted; use csv or json".into()));
    }
    let seed = seed(c);
    let sim = SimConfig { population_cap: args.cap };
    let outcomes = survival_outcomes(r, schedule, args.reps, args.epochs, 1, seed, &sim)?;
    let est = summarize_survival(&outcomes, args.epochs, &sim);

    let mut table = Table::new(&[
        "lambda", "a", "b", "schedule", "param", "reps", "epochs", "survivors", "p_hat", "ci_lo", "ci_hi", "seed",
    ]);
    table.push(vec![
        num(r.lambda),
        num(r.a),
        num(r.b),
        schedule.tag().to_string(),
        num(schedule.parameter()),
        est.reps.to_string(),
        est.epochs.to_string(),
        est.survivors.to_string(),
        num(est.p_hat),
        num(est.ci95.0),
        num(est.ci95.1),
        seed.0.to_string(),
    ]);
    let early_capped = outcomes.iter().filter(|o| o.capped && o.epochs_run == 0).count();
    table.footer.push(format!("stderr: {}", num(est.stderr)));
    table.footer.push(format!("capped: {}", est.capped));
    table.footer.push(format!("capped_before_first_kill: {early_capped}"));
    table.footer.push(format!("population_cap: {}", est.population_cap));
    table.footer.push(format!("alive_definition: {}", est.alive_definition));

    let config = json!({
        "rates": rates_json(r),
        "schedule": schedule,
        "reps": args.reps,
        "epochs": args.epochs,
        "population_cap": args.cap,
        "initial": { "n1": 0, "n2": 1 },
    });
    let header = ctx.header("survival", c, config);
    emit(&table, &header, c.format, c.out.as_deref())?;

    if let Some(path) = &args.replicates {
        let mut reps = Table::new(&["index", "survived", "extinct_at", "epochs_run", "final_z", "capped"]);
        for o in &outcomes {
            reps.push(vec![
                o.index.to_string(),
                o.survived.to_string(),
                o.extinct_at.map(|k| k.to_string()).unwrap_or_default(),
                o.epochs_run.to_string(),
                o.final_z.to_string(),
                o.capped.to_string(),
            ]);
        }
        write_text(Some(path), &reps.to_csv(&header))?;
    }

    if 2 * early_capped > outcomes.len() {
        return Err(CliError::Numerical(format!(
            "{early_capped} of {} replicates hit the population cap {} before the first killing; \
             the cap is too small for these rates",
            outcomes.len(),
            args.cap
        )));
    }
    Ok(())
}

pub fn coupling_check(args: &CouplingArgs, ctx: &Context) -> Result<(), CliError> {
    let c = &args.common;
    let r = rates(c, (2.0, 1.0, 1.0))?;
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be positive".into()));
    }
    if c.format == Format::SvgCsv {
        return Err(CliError::Usage("coupling-check output cannot be plotted; use csv or json".into()));
    }
    let seed = seed(c);
    let cfg = CouplingConfig { node_budget: args.node_budget, ..CouplingConfig::default() };
    let outcomes = (0..args.reps)
        .into_par_iter()
        .map(|i| coupled_run(r, args.delta, args.delta_high, args.horizon, &cfg, &mut seed.replicate(i)))
        .collect::<Result<Vec<_>, _>>()?;

    let count = |f: &dyn Fn(&persist_lab::graphical::CoupledOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    let violations = count(&|o| !o.containment_ok);
    let alive_low = count(&|o| o.alive_low);
    let alive_high = count(&|o| o.alive_high);
    let n = args.reps as f64;
    let mut table = Table::new(&[
        "lambda",
        "a",
        "b",
        "delta",
        "delta_high",
        "horizon",
        "reps",
        "violations",
        "alive_low",
        "alive_high",
        "p_low",
        "p_high",
        "exploded_low",
        "exploded_high",
        "seed",
    ]);
    table.push(vec![
        num(r.lambda),
        num(r.a),
        num(r.b),
        num(args.delta),
        num(args.delta_high),
        num(args.horizon),
        args.reps.to_string(),
        violations.to_string(),
        alive_low.to_string(),
        alive_high.to_string(),
        num(alive_low as f64 / n),
        num(alive_high as f64 / n),
        count(&|o| o.low_exploded).to_string(),
        count(&|o| o.high_exploded).to_string(),
        seed.0.to_string(),
    ]);
    let config = json!({
        "rates": rates_json(r),
        "delta": args.delta,
        "delta_high": args.delta_high,
        "horizon": args.horizon,
        "reps": args.reps,
        "node_budget": args.node_budget,
        "initial": "persistent",
    });
    emit(&table, &ctx.header("coupling-check", c, config), c.format, c.out.as_deref())?;
    if violations > 0 {
        return Err(CliError::Numerical(format!("{violations} containment violations")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_space_endpoints_exact() {
        let xs = log_space(1e-6, 1e-3, 20).unwrap();
        assert_eq!(xs.len(), 20);
        assert_eq!(xs[0], 1e-6);
        assert_eq!(xs[19], 1e-3);
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(log_space(2.0, 2.0, 1).unwrap(), vec![2.0]);
        assert!(log_space(0.0, 1.0, 3).is_err());
    }
}
