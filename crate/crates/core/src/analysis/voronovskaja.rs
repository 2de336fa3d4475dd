//! The limit `n (L_n f - f)(x) -> D(f)(x)` of the logarithmic Kantorovich
//! operator, where
//! `D(f) = ln_mu [A f_mu' + B f_mu'']`,
//! `A(x) = 1/2 + (x - x^2) / (2 (1 + mu)) - x` and `B(x) = (x - x^2) / 2`.

use super::AnalysisError;
use crate::basis::{king_moments, LogWeight, ReparamCurve};
use crate::exec::{self, Execution};
use crate::funcexpr::{EvalJet, FuncExpr, Smoothness};
use crate::operators::OperatorSpec;
use crate::quadrature::QuadratureRule;
use serde::{Deserialize, Serialize};

pub fn coefficient_a(mu: f64, x: f64) -> f64 {
    0.5 + (x - x * x) / (2.0 * (1.0 + mu)) - x
}

pub fn coefficient_b(x: f64) -> f64 {
    0.5 * (x - x * x)
}

/// `(1 + mu - x (1 + 2 mu) - x^2) f_mu' + (1 + mu)(x - x^2) f_mu''` for a
/// jet of `f_mu`. This is `2 (1 + mu) D(f) / ln_mu`, so it vanishes exactly
/// where `D(f)` does.
pub fn ode_expression(fmu: &EvalJet, mu: f64, x: f64) -> f64 {
    (1.0 + mu - x * (1.0 + 2.0 * mu) - x * x) * fmu.d1 + (1.0 + mu) * (x - x * x) * fmu.d2
}

/// `f` together with its composed `f_mu`, ready for repeated evaluation of
/// `D(f)`.
#[derive(Debug, Clone)]
pub struct Voronovskaja {
    weight: LogWeight,
    fmu: FuncExpr,
}

impl Voronovskaja {
    pub fn new(f: &FuncExpr, w: &LogWeight) -> Result<Voronovskaja, AnalysisError> {
        let bound = f.bind(w)?;
        bound.require(Smoothness::C2)?;
        let fmu = bound.f_mu(w)?;
        Ok(Voronovskaja { weight: *w, fmu })
    }

    pub fn fmu_jet(&self, x: f64) -> Result<EvalJet, AnalysisError> {
        Ok(self.fmu.eval_jet_c2(x)?)
    }

    /// `D(f)(x)`.
    pub fn rhs(&self, x: f64) -> Result<f64, AnalysisError> {
        let j = self.fmu_jet(x)?;
        let mu = self.weight.mu();
        Ok(self.weight.at(x) * (coefficient_a(mu, x) * j.d1 + coefficient_b(x) * j.d2))
    }

    /// The explicit ODE expression at `x`.
    pub fn ode(&self, x: f64) -> Result<f64, AnalysisError> {
        Ok(ode_expression(&self.fmu_jet(x)?, self.weight.mu(), x))
    }
}

/// `D(f)(x)`; fails unless `f` is at least C^2.
pub fn voronovskaja_rhs(f: &FuncExpr, w: &LogWeight, x: f64) -> Result<f64, AnalysisError> {
    Voronovskaja::new(f, w)?.rhs(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronovskajaRow {
    pub x: f64,
    /// `n (L_n f - f)(x)` for each entry of the schedule.
    pub scaled: Vec<f64>,
    pub rhs: f64,
    /// Limit under the model `L + c / n` from the last two entries.
    pub extrapolated: f64,
    pub abs_err: f64,
    /// `abs_err / |rhs|`; `None` when `rhs` is zero.
    pub rel_err: Option<f64>,
}

impl VoronovskajaRow {
    /// Relative tolerance where `|rhs| > threshold`, absolute otherwise.
    pub fn within(&self, rel_tol: f64, abs_tol: f64, threshold: f64) -> bool {
        if self.rhs.abs() > threshold {
            self.abs_err <= rel_tol * self.rhs.abs()
        } else {
            self.abs_err <= abs_tol
        }
    }
}

/// Richardson limit of `s(n) = L + c / n` through two samples.
pub(crate) fn richardson(n1: u64, s1: f64, n2: u64, s2: f64) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    (b * s2 - a * s1) / (b - a)
}

/// Scaled errors of the logarithmic Kantorovich operator at each `x`
/// across `n_schedule`, their extrapolated limit and `D(f)(x)`.
pub fn voronovskaja_check(
    f: &FuncExpr,
    w: &LogWeight,
    xs: &[f64],
    n_schedule: &[u64],
    rule: &QuadratureRule,
    exec: Execution,
) -> Result<Vec<VoronovskajaRow>, AnalysisError> {
    if n_schedule.len() < 4 {
        return Err(AnalysisError::InvalidInput(format!(
            "the n schedule needs at least 4 entries, got {}",
            n_schedule.len()
        )));
    }
    if n_schedule.windows(2).any(|p| p[0] >= p[1]) {
        return Err(AnalysisError::InvalidInput("the n schedule must be strictly increasing".into()));
    }
    let v = Voronovskaja::new(f, w)?;
    let bound = f.bind(w)?;
    let exact: Vec<f64> = xs.iter().map(|&x| bound.try_eval(x)).collect::<Result<_, _>>()?;
    let mut scaled = vec![Vec::with_capacity(n_schedule.len()); xs.len()];
    for &n in n_schedule {
        let spec = OperatorSpec::log_kantorovich(n, w.mu())?;
        let vals = spec.prepare(&bound, rule)?.eval_grid(xs, exec)?;
        for (i, l) in vals.into_iter().enumerate() {
            scaled[i].push(n as f64 * (l - exact[i]));
        }
    }
    let m = n_schedule.len();
    let rows = exec::try_map(exec, &xs.iter().copied().zip(scaled).collect::<Vec<_>>(), |(x, s)| {
        let rhs = v.rhs(*x)?;
        let extrapolated = richardson(n_schedule[m - 2], s[m - 2], n_schedule[m - 1], s[m - 1]);
        let abs_err = (extrapolated - rhs).abs();
        let rel_err = (rhs != 0.0).then(|| abs_err / rhs.abs());
        Ok::<_, AnalysisError>(VoronovskajaRow { x: *x, scaled: s.clone(), rhs, extrapolated, abs_err, rel_err })
    })?;
    Ok(rows)
}

/// Second moment `Q_n(x) = sum_k p_{n,k}(a_{n+1}(x)) (n+1) int_cell (t - x)^2 dt`
/// of the logarithmic Kantorovich kernel, assembled from the closed-form
/// moments.
pub fn q_n(n: u64, mu: f64, x: f64) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(AnalysisError::Domain(format!("x = {x} is outside [0, 1]")));
    }
    let a = ReparamCurve::for_degree(n, mu)?.at(x);
    let m = king_moments(n, a);
    let h = 1.0 / (n + 1) as f64;
    let d = m.m1 - x;
    // (n+1) int (t - x)^2 over [s, s + h] = (s - x)^2 + h (s - x) + h^2 / 3.
    let spread = m.m2 - m.m1 * m.m1;
    Ok(d * d + spread + h * d + h * h / 3.0)
}

/// `n Q_n(x)`, which tends to `x - x^2`.
pub fn n_q_n(n: u64, mu: f64, x: f64) -> Result<f64, AnalysisError> {
    Ok(n as f64 * q_n(n, mu, x)?)
}
