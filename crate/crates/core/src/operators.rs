//! The five operator families, evaluated pointwise and on grids.
//!
//! Every family has the shape `weight(x) * sum_k p_{n,k}(y(x)) c_k`, where
//! the coefficients `c_k` do not depend on `x`:
//!
//! | family                 | weight       | `y(x)`            | `c_k`                                   |
//! |------------------------|--------------|-------------------|-----------------------------------------|
//! | `LogKantorovich`       | `ln_mu(x)`   | `a_{n+1}(x)`      | cell average of `f / ln_mu`             |
//! | `LogSampled`           | `ln_mu(x)`   | `a_n(x)`          | `f(k/n) / ln_mu(k/n)`                   |
//! | `ClassicalBernstein`   | 1            | `x`               | `f(k/n)`                                |
//! | `ClassicalKantorovich` | 1            | `x`               | cell average of `f`                     |
//! | `ExpKantorovich`       | `e^{mu x}`   | `b_{n+1}(x)`      | cell average of `f(t) e^{-mu t}`        |
//!
//! with `b_m(x) = (e^{mu x/m} - 1) / (e^{mu/m} - 1)`. Cell averages are
//! `(n+1) int_{k/(n+1)}^{(k+1)/(n+1)}`. Coefficients are computed on first
//! use and then shared by every evaluation point.

use crate::basis::{bernstein_row, LogWeight, ReparamCurve};
use crate::exec::{self, Execution};
use crate::funcexpr::{FuncExpr, UnivariateFn};
use crate::quadrature::{QuadError, QuadratureRule};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("invalid operator: {0}")]
    InvalidSpec(String),
    #[error("cell k = {k} of degree n = {n}{}: {cause}", at_x(*.x))]
    Quadrature { k: u64, n: u64, x: Option<f64>, cause: QuadError },
    #[error("coefficient k = {k} of degree n = {n}{} is not finite", at_x(*.x))]
    NonFinite { k: u64, n: u64, x: Option<f64> },
    #[error("x = {0} lies outside [0, 1]")]
    OutOfDomain(f64),
}

fn at_x(x: Option<f64>) -> String {
    x.map(|x| format!(" (evaluating at x = {x})")).unwrap_or_default()
}

impl OperatorError {
    fn at(self, x: f64) -> OperatorError {
        match self {
            OperatorError::Quadrature { k, n, cause, .. } => {
                OperatorError::Quadrature { k, n, x: Some(x), cause }
            }
            OperatorError::NonFinite { k, n, .. } => OperatorError::NonFinite { k, n, x: Some(x) },
            e => e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    LogKantorovich,
    LogSampled,
    ClassicalBernstein,
    ClassicalKantorovich,
    ExpKantorovich,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::LogKantorovich,
        Family::LogSampled,
        Family::ClassicalBernstein,
        Family::ClassicalKantorovich,
        Family::ExpKantorovich,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::LogKantorovich => "log-kantorovich",
            Family::LogSampled => "log-sampled",
            Family::ClassicalBernstein => "classical-bernstein",
            Family::ClassicalKantorovich => "classical-kantorovich",
            Family::ExpKantorovich => "exp-kantorovich",
        }
    }

    pub fn uses_mu(self) -> bool {
        !matches!(self, Family::ClassicalBernstein | Family::ClassicalKantorovich)
    }

    fn uses_cells(self) -> bool {
        matches!(self, Family::LogKantorovich | Family::ClassicalKantorovich | Family::ExpKantorovich)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = OperatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| OperatorError::InvalidSpec(format!("unknown operator family `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub family: Family,
    pub n: u64,
    pub mu: f64,
}

impl OperatorSpec {
    pub fn new(family: Family, n: u64, mu: f64) -> Result<Self, OperatorError> {
        let spec = OperatorSpec { family, n, mu };
        spec.validate()?;
        Ok(spec)
    }

    pub fn log_kantorovich(n: u64, mu: f64) -> Result<Self, OperatorError> {
        Self::new(Family::LogKantorovich, n, mu)
    }

    pub fn validate(&self) -> Result<(), OperatorError> {
        if self.n < 1 {
            return Err(OperatorError::InvalidSpec("degree n must be >= 1".into()));
        }
        if self.family.uses_mu() && !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(OperatorError::InvalidSpec(format!(
                "{} needs mu > 0, got {}",
                self.family, self.mu
            )));
        }
        Ok(())
    }

    /// Prepares the operator for `f`. Coefficients are computed lazily and
    /// kept for the lifetime of the returned value.
    pub fn prepare<'a>(
        &self,
        f: &'a dyn UnivariateFn,
        rule: &'a QuadratureRule,
    ) -> Result<Prepared<'a>, OperatorError> {
        Prepared::new(*self, Some(f), rule, Arc::new(CellTable::empty(self.n)))
    }
}

/// Lazily filled coefficient table; each slot is written at most once.
#[derive(Debug)]
pub struct CellTable {
    cells: Vec<OnceLock<Result<f64, OperatorError>>>,
}

impl CellTable {
    fn empty(n: u64) -> Self {
        CellTable { cells: (0..=n).map(|_| OnceLock::new()).collect() }
    }

    fn filled(values: Vec<f64>) -> Self {
        CellTable {
            cells: values
                .into_iter()
                .map(|v| {
                    let c = OnceLock::new();
                    let _ = c.set(Ok(v));
                    c
                })
                .collect(),
        }
    }
}

type CacheMap = HashMap<String, Arc<CellTable>>;

fn cache() -> &'static RwLock<CacheMap> {
    static CACHE: OnceLock<RwLock<CacheMap>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn cache_key(spec: &OperatorSpec, f: &FuncExpr, rule: &QuadratureRule) -> String {
    format!(
        "{}|{}|{:x}|{}|{}|{}|{:x}|{:?}",
        spec.family,
        spec.n,
        spec.mu.to_bits(),
        f.cache_key(),
        rule.order,
        rule.max_depth,
        rule.tol.to_bits(),
        rule.kink_points
    )
}

fn shared_table(spec: &OperatorSpec, f: &FuncExpr, rule: &QuadratureRule) -> Arc<CellTable> {
    let key = cache_key(spec, f, rule);
    if let Some(t) = cache().read().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return t.clone();
    }
    let mut map = cache().write().unwrap_or_else(|e| e.into_inner());
    map.entry(key).or_insert_with(|| Arc::new(CellTable::empty(spec.n))).clone()
}

/// Drops every memoized coefficient table.
pub fn clear_cache() {
    cache().write().unwrap_or_else(|e| e.into_inner()).clear();
}

#[derive(Debug, Clone, Copy)]
enum Knots {
    Identity,
    Log(ReparamCurve),
    Exp { scale: f64, denom: f64 },
}

impl Knots {
    #[inline]
    fn at(&self, x: f64) -> f64 {
        match self {
            Knots::Identity => x,
            Knots::Log(c) => c.at(x),
            Knots::Exp { scale, denom } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    ((scale * x).exp_m1() / denom).clamp(0.0, x)
                }
            }
        }
    }
}

/// An operator bound to one function, ready for evaluation.
pub struct Prepared<'a> {
    spec: OperatorSpec,
    f: Option<&'a dyn UnivariateFn>,
    rule: &'a QuadratureRule,
    weight: Option<LogWeight>,
    knots: Knots,
    table: Arc<CellTable>,
}

impl<'a> Prepared<'a> {
    fn new(
        spec: OperatorSpec,
        f: Option<&'a dyn UnivariateFn>,
        rule: &'a QuadratureRule,
        table: Arc<CellTable>,
    ) -> Result<Self, OperatorError> {
        spec.validate()?;
        rule.validate().map_err(|e| OperatorError::InvalidSpec(e.to_string()))?;
        let bad = |e: crate::basis::BasisError| OperatorError::InvalidSpec(e.to_string());
        let weight = if spec.family.uses_mu() {
            Some(LogWeight::new(spec.mu).map_err(bad)?)
        } else {
            None
        };
        let knots = match spec.family {
            Family::LogKantorovich => Knots::Log(ReparamCurve::for_degree(spec.n, spec.mu).map_err(bad)?),
            Family::LogSampled => Knots::Log(ReparamCurve::new(spec.n, spec.mu).map_err(bad)?),
            Family::ClassicalBernstein | Family::ClassicalKantorovich => Knots::Identity,
            Family::ExpKantorovich => {
                let scale = spec.mu / (spec.n + 1) as f64;
                Knots::Exp { scale, denom: scale.exp_m1() }
            }
        };
        Ok(Prepared { spec, f, rule, weight, knots, table })
    }

    /// An operator whose coefficients `c_0..=c_n` are supplied directly,
    /// for sources whose cell averages are known in closed form.
    pub fn from_coefficients(
        spec: OperatorSpec,
        coefficients: Vec<f64>,
        rule: &'a QuadratureRule,
    ) -> Result<Self, OperatorError> {
        if coefficients.len() as u64 != spec.n + 1 {
            return Err(OperatorError::InvalidSpec(format!(
                "expected {} coefficients, got {}",
                spec.n + 1,
                coefficients.len()
            )));
        }
        Prepared::new(spec, None, rule, Arc::new(CellTable::filled(coefficients)))
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    fn compute(&self, k: u64) -> Result<f64, OperatorError> {
        let n = self.spec.n;
        let Some(f) = self.f else {
            return Err(OperatorError::InvalidSpec("coefficient table has no source".into()));
        };
        let quad = |cause| OperatorError::Quadrature { k, n, x: None, cause };
        let kinks = f.kinks();
        let v = match self.spec.family {
            Family::ClassicalBernstein => f.value(k as f64 / n as f64),
            Family::LogSampled => {
                let t = k as f64 / n as f64;
                let w = self.weight.expect("log family has a weight");
                f.value(t) / w.at(t)
            }
            Family::LogKantorovich => {
                let w = self.weight.expect("log family has a weight");
                let g = Kinked { kinks, f: |t: f64| f.value(t) / w.at(t) };
                self.rule.cell_average(&g, n, k).map_err(quad)?
            }
            Family::ClassicalKantorovich => {
                let g = Kinked { kinks, f: |t: f64| f.value(t) };
                self.rule.cell_average(&g, n, k).map_err(quad)?
            }
            Family::ExpKantorovich => {
                let mu = self.spec.mu;
                let g = Kinked { kinks, f: |t: f64| f.value(t) * (-mu * t).exp() };
                self.rule.cell_average(&g, n, k).map_err(quad)?
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(OperatorError::NonFinite { k, n, x: None })
        }
    }

    /// Coefficient `c_k`, computed on first request.
    pub fn coefficient(&self, k: u64) -> Result<f64, OperatorError> {
        self.table.cells[k as usize].get_or_init(|| self.compute(k)).clone()
    }

    /// All coefficients `c_0..=c_n`.
    pub fn coefficients(&self) -> Result<Vec<f64>, OperatorError> {
        (0..=self.spec.n).map(|k| self.coefficient(k)).collect()
    }

    fn outer_weight(&self, x: f64) -> f64 {
        match self.spec.family {
            Family::LogKantorovich | Family::LogSampled => {
                self.weight.expect("log family has a weight").at(x)
            }
            Family::ExpKantorovich => (self.spec.mu * x).exp(),
            _ => 1.0,
        }
    }

    /// Value of the operator at `x`. Cells whose basis weight is below the
    /// flush threshold are never integrated.
    pub fn eval(&self, x: f64) -> Result<f64, OperatorError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(OperatorError::OutOfDomain(x));
        }
        let y = self.knots.at(x);
        let row = bernstein_row(self.spec.n, y);
        let mut sum = 0.0;
        for (k, p) in row.iter() {
            sum += p * self.coefficient(k as u64).map_err(|e| e.at(x))?;
        }
        Ok(self.outer_weight(x) * sum)
    }

    /// Values at every point of `xs`, in order. Identical to calling
    /// [`Prepared::eval`] point by point, whichever execution mode is used.
    pub fn eval_grid(&self, xs: &[f64], exec: Execution) -> Result<Vec<f64>, OperatorError> {
        if self.spec.family.uses_cells() && xs.len() > 1 {
            // Fill the table up front so workers never wait on each other.
            exec::try_map(exec, &(0..=self.spec.n).collect::<Vec<_>>(), |&k| self.coefficient(k))?;
        }
        exec::try_map(exec, xs, |&x| self.eval(x))
    }
}

struct Kinked<'k, F> {
    kinks: &'k [f64],
    f: F,
}

impl<F: Fn(f64) -> f64 + Send + Sync> UnivariateFn for Kinked<'_, F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn kinks(&self) -> &[f64] {
        self.kinks
    }
}

fn prepared_for<'a>(
    spec: &OperatorSpec,
    f: &'a FuncExpr,
    rule: &'a QuadratureRule,
) -> Result<Prepared<'a>, OperatorError> {
    spec.validate()?;
    Prepared::new(*spec, Some(f), rule, shared_table(spec, f, rule))
}

/// Operator value at a single point. Coefficients are memoized per
/// `(spec, f, rule)` across calls.
pub fn apply(
    spec: &OperatorSpec,
    f: &FuncExpr,
    x: f64,
    rule: &QuadratureRule,
) -> Result<f64, OperatorError> {
    prepared_for(spec, f, rule)?.eval(x)
}

/// Operator values on a grid, sharing one coefficient table.
pub fn apply_grid(
    spec: &OperatorSpec,
    f: &FuncExpr,
    xs: &[f64],
    rule: &QuadratureRule,
    exec: Execution,
) -> Result<Vec<f64>, OperatorError> {
    prepared_for(spec, f, rule)?.eval_grid(xs, exec)
}
