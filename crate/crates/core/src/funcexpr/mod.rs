//! Test functions `f: [0,1] -> R` written in a small expression language,
//! with second-order forward-mode derivatives.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr   := expr ("+" | "-") expr | expr ("*" | "/") expr
//!         | "-" expr | expr "^" expr | atom
//! atom   := number | "x" | "pi" | "e" | "(" expr ")"
//!         | func "(" expr ")" | ("min" | "max") "(" expr "," expr ")"
//! func   := "exp" | "ln" | "sin" | "cos" | "abs" | "lnmu"
//! ```
//!
//! Precedence from tightest: `^` (right associative), unary `-`, `*` `/`,
//! `+` `-`. So `-x^2` is `-(x^2)` and `2^-x` is `2^(-x)`. `lnmu(t)` is
//! `ln(1 + mu + t)` with `mu` supplied when the expression is bound.

mod ast;
mod jet;
mod parser;
mod program;
mod registry;

pub use ast::{BinOp, Constant, Expr, Func};
pub use jet::Jet;
pub use parser::{parse_expr, ParseError, MAX_SOURCE_LEN};
pub use registry::{registry, registry_entry, RegistryEntry};

use crate::basis::{BasisError, LogWeight};
use program::Program;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Points used to validate finiteness on `[0, 1]`.
const VALIDATION_POINTS: usize = 1025;
/// Intervals scanned for sign changes when locating kinks.
const KINK_SCAN_INTERVALS: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuncError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("expression uses lnmu but no mu has been bound")]
    Unbound,
    #[error("expression is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("x = {0} lies outside [0, 1]")]
    OutOfDomain(f64),
    #[error("function is only {actual}, {required} is required")]
    NotSmooth { required: Smoothness, actual: Smoothness },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothness {
    C0,
    C1,
    C2,
    Analytic,
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Smoothness::C0 => "C0",
            Smoothness::C1 => "C1",
            Smoothness::C2 => "C2",
            Smoothness::Analytic => "analytic",
        })
    }
}

/// Anything that can be sampled on `[0, 1]`. Implemented by [`FuncExpr`]
/// and by closed-form callables such as saturation solutions.
pub trait UnivariateFn: Send + Sync {
    fn value(&self, x: f64) -> f64;

    /// Points where the function is not smooth. Quadrature panels are split
    /// there.
    fn kinks(&self) -> &[f64] {
        &[]
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> UnivariateFn for F {
    fn value(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Value and derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    /// `false` when the smoothness class does not guarantee `d1`.
    pub d1_valid: bool,
    /// `false` when the smoothness class does not guarantee `d2`.
    pub d2_valid: bool,
    /// A non-differentiable operation was hit exactly at this point.
    pub kink: bool,
}

#[derive(Debug, Clone)]
pub struct FuncExpr {
    expr: Expr,
    program: Arc<Program>,
    mu: Option<f64>,
    smoothness: Smoothness,
    declared: bool,
    kinks: Vec<f64>,
}

impl PartialEq for FuncExpr {
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr && self.mu == other.mu && self.smoothness == other.smoothness
    }
}

impl fmt::Display for FuncExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

impl FuncExpr {
    /// Parses without binding `mu`. The result can be printed and
    /// evaluated if it does not use `lnmu`, but its smoothness class is
    /// only known after [`FuncExpr::bind`].
    pub fn parse(src: &str) -> Result<FuncExpr, FuncError> {
        Ok(FuncExpr::from_expr(parse_expr(src)?))
    }

    pub fn from_expr(expr: Expr) -> FuncExpr {
        let program = Arc::new(Program::compile(&expr));
        FuncExpr {
            expr,
            program,
            mu: None,
            smoothness: Smoothness::C0,
            declared: false,
            kinks: Vec::new(),
        }
    }

    /// Parses and binds in one step.
    pub fn compile(src: &str, w: &LogWeight) -> Result<FuncExpr, FuncError> {
        FuncExpr::parse(src)?.bind(w)
    }

    /// Binds `mu`, checks that the expression is finite on `[0, 1]` and
    /// infers its smoothness class and kink locations.
    pub fn bind(&self, w: &LogWeight) -> Result<FuncExpr, FuncError> {
        let mu = w.mu();
        let mut out = self.clone();
        out.mu = Some(mu);
        for i in 0..VALIDATION_POINTS {
            let x = i as f64 / (VALIDATION_POINTS - 1) as f64;
            out.try_eval(x)?;
        }
        let (class, kinks) = infer(&out.expr, mu);
        for &k in &kinks {
            out.try_eval(k)?;
        }
        out.kinks = kinks;
        if !out.declared {
            out.smoothness = class;
        }
        Ok(out)
    }

    /// Overrides the inferred smoothness class.
    pub fn with_smoothness(mut self, class: Smoothness) -> FuncExpr {
        self.smoothness = class;
        self.declared = true;
        self
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    pub fn is_bound(&self) -> bool {
        self.mu.is_some()
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn kink_points(&self) -> &[f64] {
        &self.kinks
    }

    /// Identity for memo tables: canonical text plus the bound `mu`.
    pub fn cache_key(&self) -> String {
        match self.mu {
            Some(mu) => format!("{}|{:x}", self.expr, mu.to_bits()),
            None => self.expr.to_string(),
        }
    }

    fn mu_or_unbound(&self) -> Result<f64, FuncError> {
        match self.mu {
            Some(mu) => Ok(mu),
            None if self.expr.uses_lnmu() => Err(FuncError::Unbound),
            None => Ok(f64::NAN),
        }
    }

    /// Evaluates at `x`; `NaN` if the expression is not finite there or
    /// `lnmu` is unbound. No domain check.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.program
            .run::<f64>(x, self.mu.unwrap_or(f64::NAN))
            .unwrap_or(f64::NAN)
    }

    pub fn try_eval(&self, x: f64) -> Result<f64, FuncError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(FuncError::OutOfDomain(x));
        }
        let mu = self.mu_or_unbound()?;
        self.program.run::<f64>(x, mu).ok_or(FuncError::NonFinite { x })
    }

    /// Value, first and second derivative at `x` by dual numbers.
    pub fn eval_jet(&self, x: f64) -> Result<EvalJet, FuncError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(FuncError::OutOfDomain(x));
        }
        let mu = self.mu_or_unbound()?;
        let j = self
            .program
            .run::<Jet>(x, mu)
            .ok_or(FuncError::NonFinite { x })?;
        Ok(EvalJet {
            value: j.v,
            d1: j.d1,
            d2: j.d2,
            d1_valid: self.smoothness >= Smoothness::C1 && j.d1.is_finite(),
            d2_valid: self.smoothness >= Smoothness::C2 && j.d2.is_finite(),
            kink: j.kink,
        })
    }

    /// Like [`FuncExpr::eval_jet`] but fails unless the class guarantees a
    /// second derivative.
    pub fn eval_jet_c2(&self, x: f64) -> Result<EvalJet, FuncError> {
        self.require(Smoothness::C2)?;
        self.eval_jet(x)
    }

    pub fn require(&self, class: Smoothness) -> Result<(), FuncError> {
        if self.smoothness >= class {
            Ok(())
        } else {
            Err(FuncError::NotSmooth { required: class, actual: self.smoothness })
        }
    }

    /// `f / lnmu(x)`, bound to `w`. Smoothness and kinks are those of `f`.
    pub fn f_mu(&self, w: &LogWeight) -> Result<FuncExpr, FuncError> {
        let expr = Expr::binary(BinOp::Div, self.expr.clone(), Expr::call(Func::LnMu, Expr::Var));
        let mut out = FuncExpr::from_expr(expr);
        if self.declared {
            out = out.with_smoothness(self.smoothness);
        }
        out.bind(w)
    }

    /// `a f + b g`, unbound.
    pub fn linear_combination(a: f64, f: &FuncExpr, b: f64, g: &FuncExpr) -> FuncExpr {
        FuncExpr::from_expr(Expr::binary(
            BinOp::Add,
            Expr::binary(BinOp::Mul, Expr::Num(a), f.expr.clone()),
            Expr::binary(BinOp::Mul, Expr::Num(b), g.expr.clone()),
        ))
    }
}

impl UnivariateFn for FuncExpr {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn kinks(&self) -> &[f64] {
        &self.kinks
    }
}

/// Resolves a registry name, or parses the text as an expression, then
/// binds it to `w`.
pub fn resolve(name_or_expr: &str, w: &LogWeight) -> Result<FuncExpr, FuncError> {
    match registry_entry(name_or_expr) {
        Some(entry) => FuncExpr::compile(entry.source, w),
        None => FuncExpr::compile(name_or_expr, w),
    }
}

fn infer(expr: &Expr, mu: f64) -> (Smoothness, Vec<f64>) {
    let mut class = Smoothness::Analytic;
    let mut kinks = Vec::new();
    walk(expr, mu, &mut class, &mut kinks);
    kinks.sort_by(f64::total_cmp);
    kinks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    (class, kinks)
}

fn walk(e: &Expr, mu: f64, class: &mut Smoothness, kinks: &mut Vec<f64>) {
    match e {
        Expr::Num(_) | Expr::Var | Expr::Const(_) => {}
        Expr::Neg(a) => walk(a, mu, class, kinks),
        Expr::Binary(op, a, b) => {
            walk(a, mu, class, kinks);
            walk(b, mu, class, kinks);
            if *op == BinOp::Pow && a.depends_on_x() {
                if let Some(c) = b.constant_value() {
                    if c.fract() != 0.0 {
                        let roots = zeros(a, mu);
                        if !roots.is_empty() {
                            let at_root = if c > 2.0 {
                                Smoothness::C2
                            } else if c > 1.0 {
                                Smoothness::C1
                            } else {
                                Smoothness::C0
                            };
                            *class = (*class).min(at_root);
                            kinks.extend(roots);
                        }
                    }
                }
            }
        }
        Expr::Call(f, args) => {
            for a in args {
                walk(a, mu, class, kinks);
            }
            let switch = match f {
                Func::Abs => Some(args[0].clone()),
                Func::Min | Func::Max => {
                    Some(Expr::binary(BinOp::Sub, args[0].clone(), args[1].clone()))
                }
                _ => None,
            };
            if let Some(s) = switch {
                if s.depends_on_x() {
                    let roots = sign_changes(&s, mu);
                    if !roots.is_empty() {
                        *class = Smoothness::C0;
                        kinks.extend(roots);
                    }
                }
            }
        }
    }
}

fn scan(e: &Expr, mu: f64) -> Vec<(f64, f64)> {
    let p = Program::compile(e);
    (0..=KINK_SCAN_INTERVALS)
        .map(|i| {
            let x = i as f64 / KINK_SCAN_INTERVALS as f64;
            (x, p.run::<f64>(x, mu).unwrap_or(f64::NAN))
        })
        .collect()
}

fn bisect(p: &Program, mu: f64, mut lo: f64, mut hi: f64) -> f64 {
    let sign_lo = p.run::<f64>(lo, mu).unwrap_or(0.0).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = p.run::<f64>(mid, mu).unwrap_or(0.0);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Points in `(0, 1)` where `e` changes sign.
fn sign_changes(e: &Expr, mu: f64) -> Vec<f64> {
    let s = scan(e, mu);
    let p = Program::compile(e);
    let mut roots = Vec::new();
    for i in 0..s.len() - 1 {
        let (x0, v0) = s[i];
        let (x1, v1) = s[i + 1];
        if v0 * v1 < 0.0 {
            roots.push(bisect(&p, mu, x0, x1));
        } else if v0 == 0.0 && i > 0 && s[i - 1].1 * v1 < 0.0 {
            roots.push(x0);
        }
    }
    roots
}

/// Points in `[0, 1]` where `e` vanishes, including touching zeros.
fn zeros(e: &Expr, mu: f64) -> Vec<f64> {
    let mut roots = sign_changes(e, mu);
    roots.extend(scan(e, mu).into_iter().filter(|&(_, v)| v == 0.0).map(|(x, _)| x));
    roots
}
