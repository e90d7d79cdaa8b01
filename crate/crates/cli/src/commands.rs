use std::path::Path;

use kgfa_core::analytics::{
    access_probability, approx_access_probability, AnalyticReport, Engine, EvalOptions, ModelSize,
};
use kgfa_core::combinatorics::{set_difference_probability_lhs, set_difference_probability_rhs, FiniteEventSpace};
use kgfa_core::decoder::{decode_stf, DecodeOutcome};
use kgfa_core::experiments::{
    fig4, fig5, fig5_optimal_frames, iic_bench, table1, Fig4Variant, Fig5Options, IicBenchOptions, Table1Options,
    FIG4_GAMMAS, FIG5_GAMMAS, FIG5_REPETITIONS,
};
use kgfa_core::generic_iic::run_generic_iic;
use kgfa_core::model::{generate_access_map, AccessMap, IcMode, SystemConfig};
use kgfa_core::montecarlo::{
    estimate_access_probability_with, estimate_message_delay_with, sweep_with, Estimator, SimOptions,
};
use kgfa_core::rng;
use rand::Rng;
use serde::Serialize;

use crate::output::{gnuplot_script, Curve, Sink};
use crate::params::{Params, SYSTEM_KEYS};
use crate::CliError;

/// Settings shared by every command, after flag and file merging.
pub struct Context {
    pub params: Params,
    pub seed: u64,
    pub trials: Option<u64>,
    pub engine: Option<Engine>,
    pub budget_terms: Option<u64>,
    pub sink: Sink,
    pub gnuplot: Option<std::path::PathBuf>,
}

impl Context {
    fn eval(&self, default: Engine) -> EvalOptions {
        let mut opts = EvalOptions::with_engine(self.engine.unwrap_or(default));
        if let Some(b) = self.budget_terms {
            opts.term_budget = b;
        }
        opts
    }

    fn trials(&self, default: u64) -> u64 {
        self.trials.unwrap_or(default)
    }

    fn sim_options(&self) -> Result<SimOptions, CliError> {
        let estimator = match self.params.raw("estimator") {
            None | Some("pooled") => Estimator::Pooled,
            Some("tagged") => Estimator::Tagged,
            Some(other) => return Err(CliError::Usage(format!("unknown estimator '{other}'"))),
        };
        Ok(SimOptions {
            estimator,
            ..SimOptions::default()
        })
    }

    fn plot(&self, title: &str, ylabel: &str, curves: &[Curve]) -> Result<(), CliError> {
        let Some(script) = &self.gnuplot else { return Ok(()) };
        let Some(data) = &self.sink.path else {
            return Err(CliError::Usage("--gnuplot-script needs --out for the data file".into()));
        };
        gnuplot_script(script, data, title, ylabel, curves)
    }

    fn no_plot(&self, command: &str) -> Result<(), CliError> {
        match self.gnuplot {
            Some(_) => Err(CliError::Usage(format!("'{command}' has no plot"))),
            None => Ok(()),
        }
    }
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn keys_with<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    SYSTEM_KEYS.iter().copied().chain(extra.iter().copied()).collect()
}

#[derive(Serialize)]
struct AnalyticRow {
    engine: Engine,
    #[serde(rename = "R")]
    rbs: Option<u32>,
    #[serde(rename = "N")]
    mtcds: Option<u32>,
    #[serde(rename = "K")]
    repetition: u32,
    #[serde(rename = "Q")]
    frames: u32,
    gamma: f64,
    p_d1: String,
    p_d2: String,
    total: String,
    term_count: u64,
    warnings: String,
}

fn emit_analytic(ctx: &Context, report: AnalyticReport) -> Result<(), CliError> {
    warn(&report.warnings);
    if ctx.sink.format == Some(crate::output::Format::Json) {
        return ctx.sink.document(&report);
    }
    ctx.sink.rows(&[AnalyticRow {
        engine: report.engine,
        rbs: report.rbs,
        mtcds: report.mtcds,
        repetition: report.repetition,
        frames: report.frames,
        gamma: report.gamma,
        p_d1: report.p_d1,
        p_d2: report.p_d2,
        total: report.total,
        term_count: report.term_count,
        warnings: report.warnings.join("; "),
    }])
}

pub fn analytic(ctx: &Context) -> Result<(), CliError> {
    ctx.params.check_keys("analytic", &["r", "n", "k", "q", "gamma"])?;
    ctx.no_plot("analytic")?;
    let cfg = ctx.params.system()?;
    let size = ModelSize::from(&cfg);
    let result = access_probability(size, &ctx.eval(Engine::Exact))?;
    emit_analytic(
        ctx,
        AnalyticReport::new(&result, Some(size), size.gamma(), cfg.repetition, cfg.frames),
    )
}

pub fn approx(ctx: &Context) -> Result<(), CliError> {
    ctx.params.check_keys("approx", &["gamma", "k", "q"])?;
    ctx.no_plot("approx")?;
    let gamma = ctx.params.require("gamma")?;
    let k = ctx.params.require("k")?;
    let q = ctx.params.require("q")?;
    let result = approx_access_probability(gamma, k, q, &ctx.eval(Engine::Approx))?;
    emit_analytic(ctx, AnalyticReport::new(&result, None, gamma, k, q))
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    ctx.params.check_keys("simulate", &keys_with(&["estimator"]))?;
    ctx.no_plot("simulate")?;
    let cfg = ctx.params.system()?;
    let report = estimate_access_probability_with(&cfg, ctx.trials(100_000), ctx.seed, &ctx.sim_options()?)?;
    match ctx.sink.format {
        Some(crate::output::Format::Json) => ctx.sink.document(&report),
        _ => ctx.sink.rows(&[report.csv_row()]),
    }
}

pub fn delay(ctx: &Context) -> Result<(), CliError> {
    ctx.params.check_keys("delay", &SYSTEM_KEYS)?;
    ctx.no_plot("delay")?;
    let cfg = ctx.params.system()?;
    let report = estimate_message_delay_with(&cfg, ctx.trials(1_000), ctx.seed, &SimOptions::default())?;
    match ctx.sink.format {
        Some(crate::output::Format::Json) => ctx.sink.document(&report),
        _ => ctx.sink.rows(&[report.csv_row()]),
    }
}

pub fn sweep(ctx: &Context) -> Result<(), CliError> {
    ctx.params.check_keys("sweep", &keys_with(&["estimator"]))?;
    let opts = ctx.sim_options()?;
    let configs: Vec<SystemConfig> = ctx
        .params
        .expand()?
        .iter()
        .map(Params::system)
        .collect::<Result<_, _>>()?;
    let reports = sweep_with(&configs, ctx.trials(100_000), ctx.seed, &opts)?;
    let rows: Vec<_> = reports.iter().map(|r| r.csv_row()).collect();
    ctx.sink.rows(&rows)?;
    ctx.plot(
        "access probability sweep",
        "access probability",
        &[Curve {
            x: "K",
            y: "p_hat",
            select: Vec::new(),
            title: "p_hat".into(),
        }],
    )
}

pub fn run_table1(ctx: &Context, check: bool) -> Result<(), CliError> {
    ctx.params.check_keys("table1", &["estimator"])?;
    let opts = Table1Options {
        trials: ctx.trials(1_000_000),
        estimator: ctx.sim_options()?.estimator,
        eval: ctx.eval(Engine::Exact),
    };
    let rows = table1(&opts, ctx.seed)?;
    ctx.sink.rows(&rows)?;
    let mut curves = Vec::new();
    for (q, k) in [(2, 2), (2, 3), (3, 2)] {
        for n in [25, 100, 250] {
            curves.push(Curve {
                x: "gamma",
                y: "p_sim",
                select: vec![("Q", q.to_string()), ("K", k.to_string()), ("N", n.to_string())],
                title: format!("(Q,K)=({q},{k}) N={n}"),
            });
        }
    }
    ctx.plot("accuracy table", "access probability", &curves)?;
    if check {
        let failed: Vec<_> = rows.iter().filter(|r| !r.verdict().passed()).collect();
        for r in &failed {
            eprintln!(
                "check failed: Q={} K={} gamma={} N={}: {:?}",
                r.frames,
                r.repetition,
                r.gamma,
                r.mtcds,
                r.verdict()
            );
        }
        if !failed.is_empty() {
            return Err(CliError::CheckFailed(format!(
                "{} of {} cells outside tolerance",
                failed.len(),
                rows.len()
            )));
        }
    }
    Ok(())
}

pub fn run_fig4(ctx: &Context) -> Result<(), CliError> {
    ctx.params.check_keys("fig4", &[])?;
    let points = fig4(ctx.trials(200_000), ctx.seed)?;
    ctx.sink.rows(&points)?;
    let mut curves = Vec::new();
    for g in FIG4_GAMMAS {
        for v in Fig4Variant::ALL {
            curves.push(Curve {
                x: "K",
                y: "p_hat",
                select: vec![("gamma", g.to_string()), ("variant", v.label().to_string())],
                title: format!("{} γ={g}", v.label()),
            });
        }
    }
    ctx.plot("access probability versus K", "access probability", &curves)
}

pub fn run_fig5(ctx: &Context) -> Result<(), CliError> {
    ctx.params.check_keys("fig5", &["delay_trials", "analytic"])?;
    let opts = Fig5Options {
        trials: ctx.trials(200_000),
        delay_trials: ctx.params.get("delay_trials")?.unwrap_or(0),
        analytic: ctx.params.get("analytic")?.unwrap_or(true),
        eval: ctx.eval(Engine::Exact),
    };
    let points = fig5(&opts, ctx.seed)?;
    ctx.sink.rows(&points)?;
    for k in FIG5_REPETITIONS {
        for g in FIG5_GAMMAS {
            if let Some(q) = fig5_optimal_frames(&points, k, g) {
                eprintln!("K={k} gamma={g}: delay minimised at Q={q}");
            }
        }
    }
    let mut curves = Vec::new();
    for k in FIG5_REPETITIONS {
        for g in FIG5_GAMMAS {
            curves.push(Curve {
                x: "Q",
                y: "delay_frames",
                select: vec![("K", k.to_string()), ("gamma", g.to_string())],
                title: format!("K={k} γ={g}"),
            });
        }
    }
    ctx.plot("message delay versus Q", "delay (frames)", &curves)
}

fn list(params: &Params, key: &str, default: &[u32]) -> Result<Vec<u32>, CliError> {
    match params.raw(key) {
        None => Ok(default.to_vec()),
        Some(v) => v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("{key}: '{s}' is not a count")))
            })
            .collect(),
    }
}

pub fn run_iic_bench(ctx: &Context) -> Result<(), CliError> {
    let keys = ["n", "r", "k", "q", "alpha", "beta", "scheme", "ic", "selection"];
    ctx.params.check_keys("iic-bench", &keys)?;
    ctx.no_plot("iic-bench")?;
    let mut opts = IicBenchOptions::default();
    let ns = list(&ctx.params, "n", &[10, 20, 40])?;
    let rs = list(&ctx.params, "r", &[200, 400, 800])?;
    let mut base = ctx.params.clone();
    base.set("n", "1");
    base.set("r", &rs.iter().max().copied().unwrap_or(1).to_string());
    base.set("k", ctx.params.raw("k").unwrap_or(&opts.base.repetition.to_string()));
    base.set("q", ctx.params.raw("q").unwrap_or(&opts.base.frames.to_string()));
    if ctx.params.raw("ic").is_none() {
        base.set("ic", &opts.base.ic.to_string());
    }
    opts.base = base.system()?;
    if opts.base.ic == IcMode::None {
        return Err(CliError::Usage("iic-bench needs ic other than None".into()));
    }
    opts.grid = ns.iter().flat_map(|&n| rs.iter().map(move |&r| (n, r))).collect();
    opts.maps = ctx.trials(opts.maps);
    let bench = iic_bench(&opts, ctx.seed)?;
    ctx.sink.document(&bench)
}

#[derive(Serialize)]
struct IdentityReport {
    spaces: u64,
    max_events: usize,
    max_outcomes: usize,
    worst_abs_difference: f64,
    tolerance: f64,
    passed: bool,
    seed: u64,
}

pub fn check_eq2(ctx: &Context) -> Result<(), CliError> {
    ctx.params.check_keys("check-eq2", &["events", "outcomes"])?;
    ctx.no_plot("check-eq2")?;
    let max_events: usize = ctx.params.get("events")?.unwrap_or(4);
    let max_outcomes: usize = ctx.params.get("outcomes")?.unwrap_or(16);
    if !(1..=FiniteEventSpace::MAX_EVENTS).contains(&max_events) || max_outcomes < 1 {
        return Err(CliError::Usage(
            "events must be in 1..=20 and outcomes at least 1".into(),
        ));
    }
    let spaces = ctx.trials(100);
    let mut rng = rng::stream(ctx.seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..spaces {
        let events = rng.random_range(1..=max_events);
        let outcomes = rng.random_range(1..=max_outcomes);
        let weights: Vec<f64> = (0..outcomes).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / total).collect();
        let sets = (0..events)
            .map(|_| (0..outcomes).filter(|_| rng.random_bool(0.5)).collect())
            .collect();
        let order = rng.random_range(1..=events);
        let space = FiniteEventSpace::new(probs, sets)?;
        let diff =
            (set_difference_probability_lhs(&space, order)? - set_difference_probability_rhs(&space, order)?).abs();
        worst = worst.max(diff);
    }
    let tolerance = 1e-10;
    let report = IdentityReport {
        spaces,
        max_events,
        max_outcomes,
        worst_abs_difference: worst,
        tolerance,
        passed: worst <= tolerance,
        seed: ctx.seed,
    };
    ctx.sink.document(&report)?;
    if !report.passed {
        return Err(CliError::CheckFailed(format!("identity off by {worst:e}")));
    }
    Ok(())
}

pub fn gen_map(ctx: &Context) -> Result<(), CliError> {
    ctx.params.check_keys("gen-map", &SYSTEM_KEYS)?;
    ctx.no_plot("gen-map")?;
    let cfg = ctx.params.system()?;
    let map = generate_access_map(&cfg, ctx.seed)?;
    ctx.sink.text(&map.to_text())
}

#[derive(Serialize)]
struct DecodeRow {
    mtcd: u32,
    recovered: bool,
    recovery_iteration: Option<u32>,
    exclusive_rbs_first_iteration: u32,
}

pub fn decode(ctx: &Context, map_path: &Path, generic: bool) -> Result<(), CliError> {
    ctx.params.check_keys("decode", &["alpha", "beta", "ic"])?;
    ctx.no_plot("decode")?;
    let text = std::fs::read_to_string(map_path).map_err(|e| CliError::io(map_path, e))?;
    let mut template = SystemConfig::new(1, 1, 1, 1);
    template = template.with_iic(
        ctx.params.get("alpha")?.unwrap_or(template.iterations),
        ctx.params.get("beta")?.unwrap_or(template.mai_width),
    );
    if let Some(ic) = ctx.params.get::<IcMode>("ic")? {
        template = template.with_ic(ic);
    }
    let map = AccessMap::from_text(&text, template)?;
    let outcome: DecodeOutcome = if generic {
        run_generic_iic(&map)?.outcome
    } else {
        decode_stf(&map)
    };
    if ctx.sink.format == Some(crate::output::Format::Json) {
        return ctx.sink.document(&outcome);
    }
    let rows: Vec<DecodeRow> = (0..outcome.recovered.len())
        .map(|m| DecodeRow {
            mtcd: m as u32,
            recovered: outcome.recovered[m],
            recovery_iteration: outcome.recovery_iteration[m],
            exclusive_rbs_first_iteration: outcome.exclusive_rb_count_iter1[m],
        })
        .collect();
    ctx.sink.rows(&rows)
}
