//! The individual checks. Each task covers one (check, function) pair and
//! returns its records; tasks are independent and run on the worker pool.

use crate::config::{CheckId, ConfigError, ExperimentConfig};
use crate::report::{Record, Verdict};
use anyhow::Context;
use logkant::analysis::{
    modulus_grid_for, modulus_omega, norm, rate_fit, voronovskaja_check, Grid, KFunctional, KVariant, NormKind,
    SaturationSolution, Voronovskaja, DEFAULT_SEARCH_BUDGET,
};
use logkant::basis::{basis_abs_deviation, gamma_n, k_mu, operator_constants};
use logkant::{Execution, Family, FuncExpr, LogWeight, OperatorSpec, QuadratureRule, ReparamCurve, Smoothness, UnivariateFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::SQRT_2;
use std::time::Instant;

/// Points where the scaled error is compared with its limit.
pub const VORONOVSKAJA_XS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
/// Extra basis-inequality abscissae drawn from the seeded generator.
pub const RANDOM_ABSCISSAE: usize = 64;
/// The inverse-theorem band `n err ~ sup |D f|` is only enforced from here on.
pub const SATURATION_MIN_N: u64 = 128;

pub(crate) struct Ctx {
    mu: f64,
    w: LogWeight,
    rule: QuadratureRule,
    grid: Grid,
    ns: Vec<u64>,
    seed: u64,
    exec: Execution,
    functions: Vec<(String, FuncExpr)>,
}

impl Ctx {
    pub(crate) fn new(config: &ExperimentConfig) -> Result<Ctx, ConfigError> {
        Ok(Ctx {
            mu: config.mu,
            w: config.weight()?,
            rule: config.quadrature.rule(),
            grid: config.grid.build()?,
            ns: config.n_schedule.clone(),
            seed: config.seed,
            exec: config.execution,
            functions: config.resolved_functions()?,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Task {
    Converge(Family, usize),
    Lp(usize),
    Voronovskaja(usize),
    Saturation(usize),
    SaturationSolution,
    ModulusBound(usize),
    KfuncBound(usize),
    BasisInequality,
    Constants,
}

impl Task {
    fn check(self) -> CheckId {
        match self {
            Task::Converge(..) => CheckId::Converge,
            Task::Lp(_) => CheckId::Lp,
            Task::Voronovskaja(_) => CheckId::Voronovskaja,
            Task::Saturation(_) | Task::SaturationSolution => CheckId::Saturation,
            Task::ModulusBound(_) => CheckId::ModulusBound,
            Task::KfuncBound(_) => CheckId::KfuncBound,
            Task::BasisInequality => CheckId::BasisInequality,
            Task::Constants => CheckId::Constants,
        }
    }

    fn family(self) -> Option<Family> {
        match self {
            Task::Converge(f, _) => Some(f),
            Task::BasisInequality | Task::Constants => None,
            _ => Some(Family::LogKantorovich),
        }
    }

    fn function(self) -> Option<usize> {
        match self {
            Task::Converge(_, i)
            | Task::Lp(i)
            | Task::Voronovskaja(i)
            | Task::Saturation(i)
            | Task::ModulusBound(i)
            | Task::KfuncBound(i) => Some(i),
            _ => None,
        }
    }
}

/// Tasks in report order: checks as configured (duplicates dropped), then
/// families, then functions.
pub(crate) fn plan(config: &ExperimentConfig) -> Vec<Task> {
    let mut checks = config.checks.clone();
    let mut seen = std::collections::HashSet::new();
    checks.retain(|c| seen.insert(*c));
    let fns = 0..config.functions.len();
    let mut tasks = Vec::new();
    for c in checks {
        match c {
            CheckId::Converge => {
                for &fam in &config.families {
                    tasks.extend(fns.clone().map(|i| Task::Converge(fam, i)));
                }
            }
            CheckId::Lp => tasks.extend(fns.clone().map(Task::Lp)),
            CheckId::Voronovskaja => tasks.extend(fns.clone().map(Task::Voronovskaja)),
            CheckId::Saturation => {
                tasks.extend(fns.clone().map(Task::Saturation));
                tasks.push(Task::SaturationSolution);
            }
            CheckId::ModulusBound => tasks.extend(fns.clone().map(Task::ModulusBound)),
            CheckId::KfuncBound => tasks.extend(fns.clone().map(Task::KfuncBound)),
            CheckId::BasisInequality => tasks.push(Task::BasisInequality),
            CheckId::Constants => tasks.push(Task::Constants),
        }
    }
    tasks
}

struct Out {
    check: CheckId,
    family: Option<Family>,
    function: Option<String>,
    mu: f64,
    records: Vec<Record>,
}

impl Out {
    fn push(&mut self, n: Option<u64>, metric: impl Into<String>, value: f64, bound: Option<f64>, tolerance: f64, verdict: Verdict) {
        self.records.push(Record {
            check: self.check,
            family: self.family,
            n,
            mu: self.mu,
            function: self.function.clone(),
            metric: metric.into(),
            value: Some(value),
            bound,
            tolerance,
            verdict,
            wall_time: 0.0,
            note: None,
        });
    }

    fn note(&mut self, text: impl Into<String>) {
        if let Some(r) = self.records.last_mut() {
            r.note = Some(text.into());
        }
    }

    fn skip(&mut self, n: Option<u64>, metric: &str, why: impl Into<String>) {
        self.records.push(Record {
            check: self.check,
            family: self.family,
            n,
            mu: self.mu,
            function: self.function.clone(),
            metric: metric.into(),
            value: None,
            bound: None,
            tolerance: 0.0,
            verdict: Verdict::Skip,
            wall_time: 0.0,
            note: Some(why.into()),
        });
    }
}

pub(crate) fn run_task(ctx: &Ctx, task: Task) -> Vec<Record> {
    let start = Instant::now();
    let f = task.function().map(|i| &ctx.functions[i]);
    let function = match task {
        Task::SaturationSolution => Some("saturation-solution".to_string()),
        _ => f.map(|(name, _)| name.clone()),
    };
    let mut out = Out { check: task.check(), family: task.family(), function, mu: ctx.mu, records: Vec::new() };
    let result = match (task, f) {
        (Task::Converge(fam, _), Some((_, f))) => converge(ctx, fam, f, &mut out),
        (Task::Lp(_), Some((_, f))) => lp(ctx, f, &mut out),
        (Task::Voronovskaja(_), Some((_, f))) => voronovskaja(ctx, f, &mut out),
        (Task::Saturation(_), Some((_, f))) => saturation(ctx, f, &mut out),
        (Task::SaturationSolution, _) => saturation_solution(ctx, &mut out),
        (Task::ModulusBound(_), Some((_, f))) => modulus_bound(ctx, f, &mut out),
        (Task::KfuncBound(_), Some((_, f))) => kfunc_bound(ctx, f, &mut out),
        (Task::BasisInequality, _) => basis_inequality(ctx, &mut out),
        (Task::Constants, _) => constants(ctx, &mut out),
        _ => unreachable!("function tasks always carry an index"),
    };
    if let Err(e) = result {
        out.records.push(Record {
            check: out.check,
            family: out.family,
            n: None,
            mu: out.mu,
            function: out.function.clone(),
            metric: "error".into(),
            value: None,
            bound: None,
            tolerance: 0.0,
            verdict: Verdict::Fail,
            wall_time: 0.0,
            note: Some(format!("{e:#}")),
        });
    }
    let secs = start.elapsed().as_secs_f64();
    for r in &mut out.records {
        r.wall_time = secs;
    }
    out.records
}

fn sup_error(ctx: &Ctx, spec: &OperatorSpec, f: &FuncExpr, xs: &[f64]) -> anyhow::Result<f64> {
    let vals = spec.prepare(f, &ctx.rule)?.eval_grid(xs, ctx.exec)?;
    Ok(xs.iter().zip(vals).fold(0.0, |m, (&x, v)| m.max((v - f.eval(x)).abs())))
}

/// Whether `family` reproduces `f` exactly, judged by comparing `f` with the
/// family's fixed functions on a coarse grid.
fn preserved_by(family: Family, f: &FuncExpr, w: &LogWeight) -> bool {
    let mu = w.mu();
    let same = |g: &dyn Fn(f64) -> f64| {
        (0..=32).all(|i| {
            let x = i as f64 / 32.0;
            (f.eval(x) - g(x)).abs() <= 1e-14 * (1.0 + g(x).abs())
        })
    };
    match family {
        Family::LogKantorovich | Family::LogSampled => same(&|x| w.at(x)),
        Family::ClassicalBernstein => same(&|_| 1.0) || same(&|x| x),
        Family::ClassicalKantorovich => same(&|_| 1.0),
        Family::ExpKantorovich => same(&|x| (mu * x).exp()),
    }
}

/// Sup-grid error per `n`. Preserved functions must stay below `1e-11`;
/// for the rest the error may grow by at most 5% from one `n` to the next.
fn converge(ctx: &Ctx, family: Family, f: &FuncExpr, out: &mut Out) -> anyhow::Result<()> {
    let preserved = preserved_by(family, f, &ctx.w);
    let mut errs = Vec::with_capacity(ctx.ns.len());
    for &n in &ctx.ns {
        let spec = OperatorSpec::new(family, n, ctx.mu)?;
        let e = sup_error(ctx, &spec, f, ctx.grid.points())?;
        if preserved {
            out.push(Some(n), "sup_error", e, Some(0.0), 1e-11, Verdict::from_bool(e <= 1e-11));
        } else {
            match errs.last() {
                Some(&prev) => out.push(Some(n), "sup_error", e, Some(prev), 0.05, Verdict::from_bool(e <= 1.05 * prev)),
                None => out.push(Some(n), "sup_error", e, None, 0.05, Verdict::Info),
            }
        }
        errs.push(e);
    }
    if preserved {
        return Ok(());
    }
    match rate_fit(&ctx.ns, &errs) {
        Ok(fit) => {
            out.push(None, "rate_exponent", fit.exponent, Some(0.0), 0.0, Verdict::from_bool(fit.exponent < 0.0));
            out.note(format!("r2 = {:.4}, stderr = {:.3e}", fit.r_squared, fit.stderr));
        }
        Err(e) => out.skip(None, "rate_exponent", e.to_string()),
    }
    Ok(())
}

/// `||L_n f||^2_{2,mu} <= K_mu ||f||^2_{2,mu}` up to `1e-8`.
fn lp(ctx: &Ctx, f: &FuncExpr, out: &mut Out) -> anyhow::Result<()> {
    let kind = NormKind::LpMu { p: 2.0, mu: ctx.mu };
    let base = norm(f, kind, &ctx.grid, &ctx.rule)?.powi(2);
    let k = k_mu(ctx.mu);
    for &n in &ctx.ns {
        let spec = OperatorSpec::log_kantorovich(n, ctx.mu)?;
        let op = spec.prepare(f, &ctx.rule)?;
        let lf = |x: f64| op.eval(x).unwrap_or(f64::NAN);
        let image = norm(&lf, kind, &ctx.grid, &ctx.rule)?.powi(2);
        let cap = k * base;
        out.push(Some(n), "l2mu_norm_squared", image, Some(cap), 1e-8, Verdict::from_bool(image <= cap + 1e-8));
    }
    Ok(())
}

/// Richardson limit of `n (L_n f - f)(x)` over the four largest `n`
/// against `D(f)(x)`: 2% relative where `|D f| > 1e-3`, else `1e-3` absolute.
fn voronovskaja(ctx: &Ctx, f: &FuncExpr, out: &mut Out) -> anyhow::Result<()> {
    if f.smoothness() < Smoothness::C2 {
        out.skip(None, "limit", format!("needs a C2 function, this one is {}", f.smoothness()));
        return Ok(());
    }
    let ns = &ctx.ns[ctx.ns.len() - 4..];
    let rows = voronovskaja_check(f, &ctx.w, &VORONOVSKAJA_XS, ns, &ctx.rule, ctx.exec)?;
    for r in rows {
        let tol = if r.rhs.abs() > 1e-3 { 0.02 } else { 1e-3 };
        let verdict = Verdict::from_bool(r.within(0.02, 1e-3, 1e-3));
        out.push(Some(ns[3]), format!("limit_at_x={}", r.x), r.extrapolated, Some(r.rhs), tol, verdict);
    }
    Ok(())
}

/// `n` times the sup-grid error against `sup |D f|`. In the saturation
/// class (`D f = 0`) the scaled error must vanish to `1e-9`; otherwise the
/// ratio must lie within 20% of 1 from `n = 128` on.
fn saturation(ctx: &Ctx, f: &FuncExpr, out: &mut Out) -> anyhow::Result<()> {
    if f.smoothness() < Smoothness::C2 {
        out.skip(None, "n_sup_error", format!("needs a C2 function, this one is {}", f.smoothness()));
        return Ok(());
    }
    let v = Voronovskaja::new(f, &ctx.w)?;
    let mut target = 0.0_f64;
    for &x in ctx.grid.points() {
        target = target.max(v.rhs(x)?.abs());
    }
    for &n in &ctx.ns {
        let spec = OperatorSpec::log_kantorovich(n, ctx.mu)?;
        let scaled = n as f64 * sup_error(ctx, &spec, f, ctx.grid.points())?;
        if target <= 1e-9 {
            out.push(Some(n), "n_sup_error", scaled, Some(0.0), 1e-9, Verdict::from_bool(scaled <= 1e-9));
        } else {
            let ratio = scaled / target;
            let verdict = if n >= SATURATION_MIN_N {
                Verdict::from_bool((ratio - 1.0).abs() <= 0.2)
            } else {
                Verdict::Info
            };
            out.push(Some(n), "n_sup_error_over_sup_d", ratio, Some(1.0), 0.2, verdict);
        }
    }
    Ok(())
}

/// A non-trivial solution of `D f = 0` on `[0.2, 0.8]`: its scaled error
/// must fall to at most half between the smallest and largest `n`.
fn saturation_solution(ctx: &Ctx, out: &mut Out) -> anyhow::Result<()> {
    let sol = SaturationSolution::new(&ctx.w, 1.0, 0.25, 0.5, 0.2, 0.8)?;
    let inner = Grid::uniform_on(0.2, 0.8, 61)?;
    let mut scaled = Vec::with_capacity(ctx.ns.len());
    for &n in &ctx.ns {
        let spec = OperatorSpec::log_kantorovich(n, ctx.mu)?;
        let op = logkant::operators::Prepared::from_coefficients(spec, sol.cell_averages(n), &ctx.rule)?;
        let vals = op.eval_grid(inner.points(), ctx.exec)?;
        let mut err = 0.0_f64;
        for (&x, v) in inner.points().iter().zip(vals) {
            err = err.max((v - sol.value(x)?).abs());
        }
        let s = n as f64 * err;
        out.push(Some(n), "n_sup_error", s, None, 0.0, Verdict::Info);
        scaled.push(s);
    }
    let (first, last) = (ctx.ns[0], ctx.ns[ctx.ns.len() - 1]);
    if last >= 8 * first {
        let ratio = scaled[scaled.len() - 1] / scaled[0];
        out.push(None, "n_sup_error_ratio_last_first", ratio, Some(0.5), 0.0, Verdict::from_bool(ratio <= 0.5));
        out.note("c1 = 1, c2 = 0.25, x0 = 0.5");
    } else {
        out.skip(None, "n_sup_error_ratio_last_first", "the schedule must span a factor of 8");
    }
    Ok(())
}

/// Sup error against the two-term modulus bound, with a `1e-12` allowance
/// for rounding when the bound vanishes.
fn modulus_bound(ctx: &Ctx, f: &FuncExpr, out: &mut Out) -> anyhow::Result<()> {
    let fmu = f.f_mu(&ctx.w)?;
    let l2 = ctx.w.upper();
    for &n in &ctx.ns {
        let np1 = (n + 1) as f64;
        let delta = 1.0 / np1.sqrt();
        let gamma = gamma_n(&ReparamCurve::for_degree(n, ctx.mu)?);
        let w1 = modulus_omega(&fmu, delta, &modulus_grid_for(delta)?)?.value;
        let w2 = if gamma > 0.0 { modulus_omega(&fmu, gamma, &modulus_grid_for(gamma)?)?.value } else { 0.0 };
        let cap = w1 * l2 * (1.0 + 0.5 / np1.sqrt() + SQRT_2) + w2 * l2;
        let spec = OperatorSpec::log_kantorovich(n, ctx.mu)?;
        let err = sup_error(ctx, &spec, f, ctx.grid.points())?;
        out.push(Some(n), "sup_error", err, Some(cap), 1e-12, Verdict::from_bool(err <= cap + 1e-12));
    }
    Ok(())
}

struct Kinked<'a, F> {
    f: F,
    kinks: &'a [f64],
}

impl<F: Fn(f64) -> f64 + Send + Sync> UnivariateFn for Kinked<'_, F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn kinks(&self) -> &[f64] {
        self.kinks
    }
}

/// `||L_n f - f||_2` against both K-functional bounds at `p = 2`.
fn kfunc_bound(ctx: &Ctx, f: &FuncExpr, out: &mut Out) -> anyhow::Result<()> {
    let c1 = KFunctional::new(f, KVariant::PeetreC1, 2.0, DEFAULT_SEARCH_BUDGET, &ctx.rule)
        .context("C1 K-functional")?;
    let w1p = KFunctional::new(f, KVariant::SobolevW1p, 2.0, DEFAULT_SEARCH_BUDGET, &ctx.rule)
        .context("W1p K-functional")?;
    for &n in &ctx.ns {
        if n < 2 {
            out.skip(Some(n), "l2_error", "the constants need n >= 2");
            continue;
        }
        let c = operator_constants(n, ctx.mu, 2.0, None)?;
        let factor = c.norm_ratio * (c.k_mu + 1.0);
        let spec = OperatorSpec::log_kantorovich(n, ctx.mu)?;
        let op = spec.prepare(f, &ctx.rule)?;
        let diff = Kinked { f: |x: f64| op.eval(x).unwrap_or(f64::NAN) - f.eval(x), kinks: f.kink_points() };
        let err = norm(&diff, NormKind::Lp { p: 2.0 }, &ctx.grid, &ctx.rule)?;
        let cap = factor * c1.estimate(c.lambda_n).upper_bound;
        out.push(Some(n), "l2_error_vs_c1_bound", err, Some(cap), 0.0, Verdict::from_bool(err <= cap));
        let cap = factor * w1p.estimate(c.gamma_n_cap).upper_bound;
        out.push(Some(n), "l2_error_vs_w1p_bound", err, Some(cap), 0.0, Verdict::from_bool(err <= cap));
    }
    Ok(())
}

/// `max_y sum_k |y - k/(n+1)| p_{n,k}(y) < sqrt(2) / sqrt(n+1)` over the
/// grid plus seeded random abscissae.
fn basis_inequality(ctx: &Ctx, out: &mut Out) -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut ys = ctx.grid.points().to_vec();
    ys.extend((0..RANDOM_ABSCISSAE).map(|_| rng.random::<f64>()));
    for &n in &ctx.ns {
        let worst = ys.iter().map(|&y| basis_abs_deviation(n, y)).fold(0.0, f64::max);
        let cap = SQRT_2 / ((n + 1) as f64).sqrt();
        out.push(Some(n), "max_abs_deviation", worst, Some(cap), 0.0, Verdict::from_bool(worst < cap));
    }
    Ok(())
}

/// The constants per `n`, and the decay rates of `gamma_n` (about `1/n`)
/// and `T_n` (about `1/sqrt(n)`).
fn constants(ctx: &Ctx, out: &mut Out) -> anyhow::Result<()> {
    let mut ns = Vec::new();
    let (mut gammas, mut ts) = (Vec::new(), Vec::new());
    for &n in &ctx.ns {
        if n < 2 {
            out.skip(Some(n), "constants", "the constants need n >= 2");
            continue;
        }
        let c = operator_constants(n, ctx.mu, 2.0, None)?;
        for (name, v) in [
            ("k_mu", c.k_mu),
            ("gamma_n", c.gamma_n),
            ("t_n", c.t_n),
            ("lambda_n", c.lambda_n),
            ("gamma_n_cap", c.gamma_n_cap),
        ] {
            out.push(Some(n), name, v, None, 0.0, Verdict::Info);
        }
        ns.push(n);
        gammas.push(c.gamma_n);
        ts.push(c.t_n);
    }
    for (metric, vals, centre, half_width) in [("gamma_n_rate", &gammas, -1.0, 0.1), ("t_n_rate", &ts, -0.525, 0.075)] {
        match rate_fit(&ns, vals) {
            Ok(fit) => {
                let ok = (fit.exponent - centre).abs() <= half_width;
                out.push(None, metric, fit.exponent, Some(centre), half_width, Verdict::from_bool(ok));
                out.note(format!("r2 = {:.4}, stderr = {:.3e}", fit.r_squared, fit.stderr));
            }
            Err(e) => out.skip(None, metric, e.to_string()),
        }
    }
    Ok(())
}
