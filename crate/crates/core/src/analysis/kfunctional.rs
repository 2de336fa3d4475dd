//! Upper estimates of Peetre K-functionals
//! `K(f, t) = inf_g ||f - g||_p + t ||g||_X` by minimizing over a finite
//! family of smooth candidates `g`.
//!
//! The family is built once per `(f, variant, p)`: the zero function, `f`
//! itself when it is admissible, Legendre projections of degree 0..=12 and
//! Steklov means of a fine piecewise-linear interpolant of `f` at a
//! geometric net of window widths. Every candidate is an honest member of
//! the space (the Steklov mean of a continuous function is C^1) and its
//! norms are computed exactly or bounded from above, so the minimum is an
//! upper bound on the infimum.

use super::AnalysisError;
use crate::funcexpr::{FuncExpr, Smoothness, UnivariateFn};
use crate::quadrature::QuadratureRule;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KVariant {
    /// `||g||_X = ||g||_inf + ||g'||_inf` over `g in C^1`.
    PeetreC1,
    /// `||g||_X = ||g||_p + ||g'||_p` over `g in W^{1,p}`.
    SobolevW1p,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCandidate {
    pub description: String,
    /// `||f - g||_p`.
    pub distance: f64,
    /// `||g||_X` for the variant.
    pub smooth_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFunctionalEstimate {
    pub upper_bound: f64,
    /// Description of the minimizing candidate.
    pub argmin: String,
    /// Always `true`: the value bounds the infimum from above.
    pub is_upper_bound: bool,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KFunctional {
    pub variant: KVariant,
    pub p: f64,
    pub candidates: Vec<KCandidate>,
    pub budget_exhausted: bool,
}

pub const DEFAULT_SEARCH_BUDGET: usize = 48;
const MAX_LEGENDRE_DEGREE: usize = 12;
/// Cells of the piecewise-linear interpolant behind the Steklov means.
const FINE_CELLS: usize = 1024;
/// Sampling grid for sup norms of polynomials.
const SUP_CELLS: usize = 4096;

fn legendre_all(d: usize, u: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; d + 1];
    let mut dp = vec![0.0; d + 1];
    p[0] = 1.0;
    if d >= 1 {
        p[1] = u;
        dp[1] = 1.0;
    }
    for j in 2..=d {
        let jf = j as f64;
        p[j] = ((2.0 * jf - 1.0) * u * p[j - 1] - (jf - 1.0) * p[j - 2]) / jf;
        dp[j] = dp[j - 2] + (2.0 * jf - 1.0) * p[j - 1];
    }
    (p, dp)
}

struct Poly<'a> {
    coeffs: &'a [f64],
}

impl Poly<'_> {
    /// Value and derivative on `[0, 1]` of `sum c_j P_j(2x - 1)`.
    fn eval(&self, x: f64) -> (f64, f64) {
        let d = self.coeffs.len() - 1;
        let (p, dp) = legendre_all(d, 2.0 * x - 1.0);
        let mut v = 0.0;
        let mut dv = 0.0;
        for j in 0..=d {
            v += self.coeffs[j] * p[j];
            dv += self.coeffs[j] * dp[j];
        }
        (v, 2.0 * dv)
    }
}

struct Pow<F: Fn(f64) -> f64 + Send + Sync> {
    f: F,
    p: f64,
    kinks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Send + Sync> UnivariateFn for Pow<F> {
    fn value(&self, x: f64) -> f64 {
        let a = (self.f)(x).abs();
        if self.p == 2.0 {
            a * a
        } else {
            a.powf(self.p)
        }
    }

    fn kinks(&self) -> &[f64] {
        &self.kinks
    }
}

fn lp<F: Fn(f64) -> f64 + Send + Sync>(
    rule: &QuadratureRule,
    f: F,
    p: f64,
    kinks: Vec<f64>,
) -> Result<f64, AnalysisError> {
    let s = rule.integrate(&Pow { f, p, kinks }, 0.0, 1.0)?;
    Ok(s.max(0.0).powf(1.0 / p))
}

/// Steklov mean `g(x) = (1/sigma) int_{x - sigma/2}^{x + sigma/2} f_L` of the
/// piecewise-linear interpolant `f_L` of the evenly reflected `f`.
struct Steklov<'a> {
    xs: &'a [f64],
    vs: &'a [f64],
    cumulative: &'a [f64],
    half: f64,
    sigma: f64,
}

impl Steklov<'_> {
    fn cell(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    fn slope(&self, i: usize) -> f64 {
        (self.vs[i + 1] - self.vs[i]) / (self.xs[i + 1] - self.xs[i])
    }

    fn linear(&self, x: f64) -> f64 {
        let i = self.cell(x);
        self.vs[i] + (x - self.xs[i]) * self.slope(i)
    }

    fn primitive(&self, x: f64) -> f64 {
        let i = self.cell(x);
        let d = x - self.xs[i];
        self.cumulative[i] + d * self.vs[i] + 0.5 * d * d * self.slope(i)
    }

    fn value(&self, x: f64) -> f64 {
        (self.primitive(x + self.half) - self.primitive(x - self.half)) / self.sigma
    }

    fn derivative(&self, x: f64) -> f64 {
        (self.linear(x + self.half) - self.linear(x - self.half)) / self.sigma
    }
}

impl KFunctional {
    /// Builds the candidate family for `f`. `search_budget` caps the number
    /// of candidates; the Steklov net gets whatever the fixed candidates
    /// leave over.
    pub fn new(
        f: &FuncExpr,
        variant: KVariant,
        p: f64,
        search_budget: usize,
        rule: &QuadratureRule,
    ) -> Result<KFunctional, AnalysisError> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(AnalysisError::InvalidInput(format!("p must lie in [1, inf), got {p}")));
        }
        f.try_eval(0.5)?;
        let kinks = f.kink_points().to_vec();
        let mut out = KFunctional { variant, p, candidates: Vec::new(), budget_exhausted: false };
        let mut budget = search_budget;
        fn push(out: &mut KFunctional, budget: &mut usize, c: KCandidate) -> bool {
            if *budget == 0 {
                out.budget_exhausted = true;
                return false;
            }
            *budget -= 1;
            out.candidates.push(c);
            true
        }

        let f_norm = lp(rule, |x| f.eval(x), p, kinks.clone())?;
        if !push(&mut out, &mut budget, KCandidate { description: "zero".into(), distance: f_norm, smooth_norm: 0.0 }) {
            return Ok(out);
        }

        if let Some(norm) = self_norm(f, variant, p, rule)? {
            if !push(&mut out, &mut budget, KCandidate { description: "f".into(), distance: 0.0, smooth_norm: norm }) {
                return Ok(out);
            }
        }

        let mut coeffs = Vec::with_capacity(MAX_LEGENDRE_DEGREE + 1);
        for j in 0..=MAX_LEGENDRE_DEGREE {
            let pj = |x: f64| f.eval(x) * legendre_all(j, 2.0 * x - 1.0).0[j];
            let pj = Kinked { f: pj, kinks: &kinks };
            coeffs.push((2 * j + 1) as f64 * rule.integrate(&pj, 0.0, 1.0)?);
        }
        for d in 0..=MAX_LEGENDRE_DEGREE {
            let poly = Poly { coeffs: &coeffs[..=d] };
            let distance = lp(rule, |x| f.eval(x) - poly.eval(x).0, p, kinks.clone())?;
            let smooth_norm = match variant {
                KVariant::PeetreC1 => {
                    let h = 1.0 / SUP_CELLS as f64;
                    let (mut m0, mut m1) = (0.0_f64, 0.0_f64);
                    for i in 0..=SUP_CELLS {
                        let (v, dv) = poly.eval(i as f64 * h);
                        m0 = m0.max(v.abs());
                        m1 = m1.max(dv.abs());
                    }
                    // Markov: |p'| <= 2 d^2 |p| on [0, 1], so the sampled
                    // maximum of a degree-d polynomial is within h d^2 of
                    // the true one (relative).
                    let df = d as f64;
                    let dm1 = (df - 1.0).max(0.0);
                    m0 / (1.0 - h * df * df) + m1 / (1.0 - h * dm1 * dm1)
                }
                KVariant::SobolevW1p => {
                    lp(rule, |x| poly.eval(x).0, p, Vec::new())? + lp(rule, |x| poly.eval(x).1, p, Vec::new())?
                }
            };
            if !push(&mut out, &mut budget, KCandidate { description: format!("legendre(degree={d})"), distance, smooth_norm }) {
                return Ok(out);
            }
        }

        let (xs, vs, cumulative) = reflected_interpolant(f);
        let sigma_max = 0.5;
        let sigma_min = 2.0 / FINE_CELLS as f64;
        let count = budget;
        if count == 0 {
            out.budget_exhausted = true;
            return Ok(out);
        }
        let ratio = if count > 1 { (sigma_min / sigma_max).powf(1.0 / (count - 1) as f64) } else { 1.0 };
        let fine_rule = QuadratureRule { order: rule.order.min(8), ..rule.clone() };
        for i in 0..count {
            let sigma = sigma_max * ratio.powi(i as i32);
            let g = Steklov { xs: &xs, vs: &vs, cumulative: &cumulative, half: 0.5 * sigma, sigma };
            let mut breaks: Vec<f64> = xs
                .iter()
                .flat_map(|&x| [x - g.half, x + g.half])
                .filter(|&b| b > 0.0 && b < 1.0)
                .collect();
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let mut with_f = breaks.clone();
            with_f.extend_from_slice(&kinks);
            with_f.sort_by(f64::total_cmp);
            let distance = lp(&fine_rule, |x| f.eval(x) - g.value(x), p, with_f)?;
            let smooth_norm = match variant {
                KVariant::PeetreC1 => steklov_sup(&g, &breaks) + steklov_sup_derivative(&g, &breaks),
                KVariant::SobolevW1p => {
                    lp(&fine_rule, |x| g.value(x), p, breaks.clone())?
                        + lp(&fine_rule, |x| g.derivative(x), p, breaks.clone())?
                }
            };
            push(&mut out, &mut budget, KCandidate { description: format!("steklov(sigma={sigma:.6e})"), distance, smooth_norm });
        }
        Ok(out)
    }

    /// `min_g ||f - g||_p + t ||g||_X` over the candidate family.
    pub fn estimate(&self, t: f64) -> KFunctionalEstimate {
        let mut best = f64::INFINITY;
        let mut argmin = String::new();
        for c in &self.candidates {
            let v = c.distance + t * c.smooth_norm;
            if v < best {
                best = v;
                argmin.clone_from(&c.description);
            }
        }
        KFunctionalEstimate {
            upper_bound: best,
            argmin,
            is_upper_bound: true,
            budget_exhausted: self.budget_exhausted,
        }
    }
}

/// One-shot K-functional estimate.
pub fn k_functional(
    f: &FuncExpr,
    t: f64,
    variant: KVariant,
    p: f64,
    search_budget: usize,
    rule: &QuadratureRule,
) -> Result<KFunctionalEstimate, AnalysisError> {
    if !(t > 0.0) {
        return Err(AnalysisError::InvalidInput(format!("t must be positive, got {t}")));
    }
    Ok(KFunctional::new(f, variant, p, search_budget, rule)?.estimate(t))
}

struct Kinked<'k, F> {
    f: F,
    kinks: &'k [f64],
}

impl<F: Fn(f64) -> f64 + Send + Sync> UnivariateFn for Kinked<'_, F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn kinks(&self) -> &[f64] {
        self.kinks
    }
}

/// The variant norm of `f` itself, or `None` if `f` is not admissible.
fn self_norm(f: &FuncExpr, variant: KVariant, p: f64, rule: &QuadratureRule) -> Result<Option<f64>, AnalysisError> {
    let d1 = |x: f64| f.eval_jet(x).map(|j| j.d1).unwrap_or(f64::NAN);
    match variant {
        KVariant::PeetreC1 => {
            if f.smoothness() < Smoothness::C1 {
                return Ok(None);
            }
            let h = 1.0 / SUP_CELLS as f64;
            let (mut m0, mut m1, mut m2) = (0.0_f64, 0.0_f64, 0.0_f64);
            for i in 0..=SUP_CELLS {
                let j = f.eval_jet(i as f64 * h)?;
                m0 = m0.max(j.value.abs());
                m1 = m1.max(j.d1.abs());
                if j.d2.is_finite() {
                    m2 = m2.max(j.d2.abs());
                }
            }
            // Between samples the value moves by at most h/2 times the slope.
            let sup = m0 + 0.5 * h * m1 + 0.125 * h * h * m2;
            let sup_d = m1 + 0.5 * h * m2;
            Ok(Some(sup + sup_d))
        }
        KVariant::SobolevW1p => {
            let kinks = f.kink_points().to_vec();
            let a = lp(rule, |x| f.eval(x), p, kinks.clone())?;
            match lp(rule, d1, p, kinks) {
                Ok(b) if b.is_finite() => Ok(Some(a + b)),
                _ => Ok(None),
            }
        }
    }
}

/// Nodes, values and running integrals of the piecewise-linear
/// interpolant of `f` on `[0, 1]` refined at its kinks, reflected evenly
/// across both endpoints.
fn reflected_interpolant(f: &FuncExpr) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut base: Vec<f64> = (0..=FINE_CELLS).map(|i| i as f64 / FINE_CELLS as f64).collect();
    base.extend_from_slice(f.kink_points());
    base.sort_by(f64::total_cmp);
    base.dedup();
    let vals: Vec<f64> = base.iter().map(|&x| f.eval(x)).collect();
    let mut xs = Vec::with_capacity(3 * base.len());
    let mut vs = Vec::with_capacity(3 * base.len());
    for i in (1..base.len()).rev() {
        xs.push(-base[i]);
        vs.push(vals[i]);
    }
    xs.extend_from_slice(&base);
    vs.extend_from_slice(&vals);
    for i in (0..base.len() - 1).rev() {
        xs.push(2.0 - base[i]);
        vs.push(vals[i]);
    }
    let mut cumulative = vec![0.0; xs.len()];
    for i in 1..xs.len() {
        cumulative[i] = cumulative[i - 1] + 0.5 * (xs[i] - xs[i - 1]) * (vs[i] + vs[i - 1]);
    }
    (xs, vs, cumulative)
}

/// Exact sup of the piecewise-quadratic Steklov mean on `[0, 1]`: it is
/// attained at a breakpoint, an endpoint, or a zero of the piecewise-linear
/// derivative.
fn steklov_sup(g: &Steklov<'_>, breaks: &[f64]) -> f64 {
    let mut pts = Vec::with_capacity(breaks.len() + 2);
    pts.push(0.0);
    pts.extend_from_slice(breaks);
    pts.push(1.0);
    let mut m = 0.0_f64;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        m = m.max(g.value(a).abs()).max(g.value(b).abs());
        let (da, db) = (g.derivative(a), g.derivative(b));
        if da * db < 0.0 {
            let c = a + (b - a) * da / (da - db);
            m = m.max(g.value(c).abs());
        }
    }
    m
}

/// Exact sup of the piecewise-linear derivative: attained at a breakpoint
/// or an endpoint.
fn steklov_sup_derivative(g: &Steklov<'_>, breaks: &[f64]) -> f64 {
    breaks
        .iter()
        .chain([0.0, 1.0].iter())
        .fold(0.0_f64, |m, &x| m.max(g.derivative(x).abs()))
}
