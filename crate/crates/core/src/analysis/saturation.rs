//! Classical solutions of `D(f) = 0`.
//!
//! With `c = 1 / (1 + mu)` the equation reads `(f_mu' / w1)' = 0` for
//! `w1 = e^{-c x} / (x - x^2)`, so `f = ln_mu (c1 + c2 int_{x0}^x w1)`. The
//! primitive of `w1` splits into `e^{-cx}/x + e^{-cx}/(1-x)`, and both parts
//! integrate to a logarithm plus an entire series, which keeps everything
//! in closed form up to the endpoint singularities.

use super::AnalysisError;
use crate::basis::LogWeight;
use crate::funcexpr::{EvalJet, Jet, UnivariateFn};
use super::voronovskaja::ode_expression;

/// `(w0, w1, w2) = (ln_mu, e^{-x/(1+mu)} / (x - x^2), (2 / ln_mu) e^{x/(1+mu)})`,
/// the weights of the standard form `D(f) = (1/w2) ((1/w1) (f/w0)')'`.
pub fn saturation_weights(w: &LogWeight, x: f64) -> Result<(f64, f64, f64), AnalysisError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(AnalysisError::Domain(format!("weights are singular at x = {x}; need 0 < x < 1")));
    }
    let c = 1.0 / (1.0 + w.mu());
    let l = w.at(x);
    Ok((l, (-c * x).exp() / (x - x * x), 2.0 / l * (c * x).exp()))
}

const SERIES_TERMS: usize = 40;

/// `sum_{j>=1} s^j / (j j!)` and `sum_{j>=1} s^j / ((j+1) j j!)` for the
/// primitive and its antiderivative, with `s = a t`.
fn series(a: f64, t: f64) -> (f64, f64) {
    let s = a * t;
    let mut pow_over_fact = 1.0;
    let mut e = 0.0;
    let mut anti = 0.0;
    for j in 1..=SERIES_TERMS {
        let jf = j as f64;
        pow_over_fact *= s / jf;
        let term = pow_over_fact / jf;
        e += term;
        anti += term / (jf + 1.0);
        if term.abs() < 1e-18 * e.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    (e, anti)
}

fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// A primitive `E` of `w1` on `(0, 1)`.
fn primitive(c: f64, x: f64) -> f64 {
    let (left, _) = series(-c, x);
    let u = 1.0 - x;
    let (right, _) = series(c, u);
    x.ln() + left - (-c).exp() * (u.ln() + right)
}

/// An antiderivative of [`primitive`], continuous on `[0, 1]`.
fn primitive_antiderivative(c: f64, t: f64) -> f64 {
    let (_, left) = series(-c, t);
    let u = 1.0 - t;
    let (_, right) = series(c, u);
    // int ln t = t ln t - t, int t^j = t^{j+1}/(j+1), int ln(1-t) = -(1-t) ln(1-t) + (1-t).
    xlogx(t) - t + t * left - (-c).exp() * (-xlogx(u) + u - u * right)
}

/// `f(x) = ln_mu(x) (c1 + c2 int_{x0}^x w1)`, evaluated on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationSolution {
    weight: LogWeight,
    pub c1: f64,
    pub c2: f64,
    pub x0: f64,
    pub lo: f64,
    pub hi: f64,
    offset: f64,
}

impl SaturationSolution {
    pub fn new(w: &LogWeight, c1: f64, c2: f64, x0: f64, lo: f64, hi: f64) -> Result<Self, AnalysisError> {
        if !(x0 > 0.0 && x0 < 1.0) {
            return Err(AnalysisError::Domain(format!("x0 = {x0} must lie in (0, 1)")));
        }
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return Err(AnalysisError::Domain(format!("[{lo}, {hi}] is not a closed interval inside (0, 1)")));
        }
        if !(c1.is_finite() && c2.is_finite()) {
            return Err(AnalysisError::InvalidInput("c1 and c2 must be finite".into()));
        }
        let c = 1.0 / (1.0 + w.mu());
        Ok(SaturationSolution { weight: *w, c1, c2, x0, lo, hi, offset: primitive(c, x0) })
    }

    pub fn mu(&self) -> f64 {
        self.weight.mu()
    }

    fn c(&self) -> f64 {
        1.0 / (1.0 + self.weight.mu())
    }

    /// `f(x)`; fails outside `[lo, hi]`.
    pub fn value(&self, x: f64) -> Result<f64, AnalysisError> {
        if !(self.lo..=self.hi).contains(&x) {
            return Err(AnalysisError::Domain(format!(
                "x = {x} is outside the evaluation interval [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(self.unchecked(x))
    }

    /// `f(x)` anywhere in `(0, 1)`; infinite at the endpoints.
    pub fn unchecked(&self, x: f64) -> f64 {
        self.weight.at(x) * self.f_mu(x)
    }

    /// `f_mu(x) = c1 + c2 int_{x0}^x w1`.
    pub fn f_mu(&self, x: f64) -> f64 {
        if self.c2 == 0.0 {
            return self.c1;
        }
        self.c1 + self.c2 * (primitive(self.c(), x) - self.offset)
    }

    fn f_mu_jet(&self, x: f64) -> Jet {
        let c = self.c();
        let q = x - x * x;
        let e = (-c * x).exp();
        let w1 = e / q;
        let dw1 = e * (-c * q - (1.0 - 2.0 * x)) / (q * q);
        Jet { v: self.f_mu(x), d1: self.c2 * w1, d2: self.c2 * dw1, kink: false }
    }

    /// Jet of `f` itself, assembled as `ln_mu * f_mu`.
    pub fn jet(&self, x: f64) -> Result<EvalJet, AnalysisError> {
        self.value(x)?;
        let j = Jet::variable(x).ln_mu(self.mu()) * self.f_mu_jet(x);
        Ok(EvalJet { value: j.v, d1: j.d1, d2: j.d2, d1_valid: true, d2_valid: true, kink: false })
    }

    /// The explicit ODE expression for this solution, with `f_mu` recovered
    /// from the jet of `f` by division through `ln_mu`.
    pub fn ode_residual(&self, x: f64) -> Result<f64, AnalysisError> {
        let f = self.jet(x)?;
        let fj = Jet { v: f.value, d1: f.d1, d2: f.d2, kink: false };
        let fmu = fj / Jet::variable(x).ln_mu(self.mu());
        let fmu = EvalJet { value: fmu.v, d1: fmu.d1, d2: fmu.d2, d1_valid: true, d2_valid: true, kink: false };
        Ok(ode_expression(&fmu, self.mu(), x))
    }

    /// Exact cell averages `(n+1) int_{k/(n+1)}^{(k+1)/(n+1)} f_mu` for
    /// `k = 0..=n`, the coefficients of the logarithmic Kantorovich operator.
    pub fn cell_averages(&self, n: u64) -> Vec<f64> {
        let c = self.c();
        let m = (n + 1) as f64;
        let anti: Vec<f64> = (0..=n + 1)
            .map(|k| {
                let t = if k == n + 1 { 1.0 } else { k as f64 / m };
                primitive_antiderivative(c, t)
            })
            .collect();
        anti.windows(2)
            .map(|p| {
                if self.c2 == 0.0 {
                    self.c1
                } else {
                    self.c1 + self.c2 * (m * (p[1] - p[0]) - self.offset)
                }
            })
            .collect()
    }
}

impl UnivariateFn for SaturationSolution {
    fn value(&self, x: f64) -> f64 {
        self.unchecked(x)
    }
}
