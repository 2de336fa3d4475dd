use clap::{Args, Parser, Subcommand};
use logkant::basis::operator_constants;
use logkant::funcexpr::resolve;
use logkant::operators::apply;
use logkant::{Execution, Family, OperatorSpec};
use logkant_harness::config::{parse_check_list, parse_format_list, parse_n_list};
use logkant_harness::{emit, json, run, ConfigError, ExperimentConfig, ExperimentReport, HarnessError, Verdict};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Runs and reports convergence checks for logarithm-preserving
/// Kantorovich-Bernstein operators.
#[derive(Parser)]
#[command(name = "logkant", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply one operator to one function at a few points.
    Eval {
        #[command(flatten)]
        opts: Opts,
        #[arg(long, default_value = "log-kantorovich")]
        family: String,
        /// Comma-separated evaluation points.
        #[arg(long, default_value = "0,0.25,0.5,0.75,1")]
        x: String,
    },
    /// Run the configured checks and write the report.
    Suite {
        #[command(flatten)]
        opts: Opts,
        /// Run the tasks one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Re-render a saved JSON report.
    Report {
        /// A report.json written by `suite`.
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv,svg")]
        format: String,
    },
    /// Print K_mu, gamma_n, T_n, Lambda_n and Gamma_n for the n schedule.
    Constants {
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args)]
struct Opts {
    /// Config file, `key = value` lines or JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Registry name or expression in x. Repeat for several functions.
    #[arg(long)]
    function: Vec<String>,
    #[arg(long)]
    mu: Option<f64>,
    /// Comma-separated, strictly increasing degrees.
    #[arg(long)]
    n_schedule: Option<String>,
    /// Comma-separated check names; an empty string runs nothing.
    #[arg(long)]
    checks: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv, json, svg.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Gauss-Legendre nodes per panel.
    #[arg(long)]
    quad_order: Option<usize>,
}

impl Opts {
    fn config(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if !self.function.is_empty() {
            c.functions = self.function.clone();
        }
        if let Some(mu) = self.mu {
            c.mu = mu;
        }
        if let Some(ns) = &self.n_schedule {
            c.n_schedule = parse_n_list(ns)?;
        }
        if let Some(checks) = &self.checks {
            c.checks = parse_check_list(checks)?;
        }
        if let Some(out) = &self.out {
            c.output.dir = Some(out.clone());
        }
        if let Some(f) = &self.format {
            c.output.formats = parse_format_list(f)?;
        }
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(order) = self.quad_order {
            c.quadrature.order = order;
        }
        Ok(c)
    }
}

#[derive(Serialize)]
struct EvalRow {
    n: u64,
    x: f64,
    value: f64,
    exact: f64,
    error: f64,
}

fn eval(opts: &Opts, family: &str, xs: &str) -> Result<u8, HarnessError> {
    let mut c = opts.config()?;
    // No checks run here, so their schedule requirements do not apply.
    c.checks.clear();
    c.validate()?;
    let family: Family = family.parse().map_err(|e| ConfigError(format!("{e}")))?;
    let xs: Vec<f64> = xs
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| ConfigError(format!("bad evaluation point `{s}`"))))
        .collect::<Result<_, _>>()?;
    let w = c.weight()?;
    let rule = c.quadrature.rule();
    let mut rows = Vec::new();
    for name in &c.functions {
        let f = resolve(name, &w).map_err(|e| ConfigError(format!("function `{name}`: {e}")))?;
        for &n in &c.n_schedule {
            let spec = OperatorSpec::new(family, n, c.mu).map_err(|e| ConfigError(e.to_string()))?;
            for &x in &xs {
                let value = apply(&spec, &f, x, &rule).map_err(|e| ConfigError(e.to_string()))?;
                let exact = f.eval(x);
                rows.push((name.clone(), EvalRow { n, x, value, exact, error: value - exact }));
            }
        }
    }
    if opts.format.as_deref() == Some("json") {
        let plain: Vec<&EvalRow> = rows.iter().map(|r| &r.1).collect();
        print!("{}", json::to_pretty(&plain).map_err(anyhow::Error::from)?);
    } else {
        println!("{:<12} {:>6} {:>8} {:>24} {:>24} {:>12}", "function", "n", "x", "L_n f(x)", "f(x)", "error");
        for (name, r) in rows {
            println!("{:<12} {:>6} {:>8} {:>24.17e} {:>24.17e} {:>12.3e}", name, r.n, r.x, r.value, r.exact, r.error);
        }
    }
    Ok(0)
}

fn summary(report: &ExperimentReport) -> String {
    let mut lines = Vec::new();
    let mut checks = Vec::new();
    for r in &report.records {
        if !checks.contains(&r.check) {
            checks.push(r.check);
        }
    }
    for c in checks {
        let count = |v: Verdict| report.records.iter().filter(|r| r.check == c && r.verdict == v).count();
        lines.push(format!(
            "{:<17} {:>4} pass {:>4} fail {:>4} skip {:>4} info",
            c.name(),
            count(Verdict::Pass),
            count(Verdict::Fail),
            count(Verdict::Skip),
            count(Verdict::Info)
        ));
    }
    if lines.is_empty() {
        lines.push("no checks requested".into());
    }
    lines.join("\n")
}

fn suite(opts: &Opts, sequential: bool) -> Result<u8, HarnessError> {
    let mut c = opts.config()?;
    if sequential {
        c.execution = Execution::Sequential;
    }
    let report = run(&c)?;
    match &c.output.dir {
        Some(dir) => {
            for p in emit(&report, &c.output.formats, dir)? {
                println!("wrote {}", p.display());
            }
            println!("{}", summary(&report));
        }
        None => {
            print!("{}", report.to_json());
            eprintln!("{}", summary(&report));
        }
    }
    Ok(if report.failures() > 0 { 1 } else { 0 })
}

fn rerender(input: &Path, out: &Path, format: &str) -> Result<u8, HarnessError> {
    let formats = parse_format_list(format)?;
    let report = ExperimentReport::load(input)?;
    for p in emit(&report, &formats, out)? {
        println!("wrote {}", p.display());
    }
    Ok(0)
}

fn constants(opts: &Opts) -> Result<u8, HarnessError> {
    let mut c = opts.config()?;
    // No checks run here, so their schedule requirements do not apply.
    c.checks.clear();
    c.validate()?;
    let mut rows = Vec::new();
    for &n in c.n_schedule.iter().filter(|&&n| n >= 2) {
        rows.push(operator_constants(n, c.mu, 2.0, None).map_err(|e| ConfigError(e.to_string()))?);
    }
    match opts.format.as_deref() {
        Some("json") => print!("{}", json::to_pretty(&rows).map_err(anyhow::Error::from)?),
        Some("csv") => {
            println!("n,mu,k_mu,gamma_n,t_n,lambda_n,gamma_n_cap");
            for r in rows {
                println!("{},{},{},{},{},{},{}", r.n, r.mu, r.k_mu, r.gamma_n, r.t_n, r.lambda_n, r.gamma_n_cap);
            }
        }
        _ => {
            println!("{:>6} {:>10} {:>12} {:>12} {:>12} {:>12}", "n", "K_mu", "gamma_n", "T_n", "Lambda_n", "Gamma_n");
            for r in rows {
                println!(
                    "{:>6} {:>10.6} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e}",
                    r.n, r.k_mu, r.gamma_n, r.t_n, r.lambda_n, r.gamma_n_cap
                );
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| match &cli.command {
        Command::Eval { opts, family, x } => eval(opts, family, x),
        Command::Suite { opts, sequential } => suite(opts, *sequential),
        Command::Report { input, out, format } => rerender(input, out, format),
        Command::Constants { opts } => constants(opts),
    });
    match outcome {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(3),
    }
}
