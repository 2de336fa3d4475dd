use super::{AnalysisError, Grid};
use crate::funcexpr::UnivariateFn;
use crate::quadrature::QuadratureRule;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Grid estimate of the modulus of continuity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    /// `max |f(t) - f(x)|` over grid pairs with `|t - x| <= delta`; never
    /// above the true modulus.
    pub value: f64,
    /// The same on every other grid point.
    pub coarse: f64,
}

impl ModulusEstimate {
    /// Change between the coarse and the full grid. Small values mean the
    /// grid has resolved the modulus.
    pub fn refinement_gap(&self) -> f64 {
        self.value - self.coarse
    }
}

/// Largest oscillation of `values` over windows `[x_i, x_i + delta]`.
fn window_oscillation(points: &[f64], values: &[f64], delta: f64) -> f64 {
    let reach = delta * (1.0 + 1e-12) + 1e-15;
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0_f64;
    let mut right = 0usize;
    for left in 0..points.len() {
        while right < points.len() && points[right] - points[left] <= reach {
            while maxq.back().is_some_and(|&j| values[j] <= values[right]) {
                maxq.pop_back();
            }
            maxq.push_back(right);
            while minq.back().is_some_and(|&j| values[j] >= values[right]) {
                minq.pop_back();
            }
            minq.push_back(right);
            right += 1;
        }
        while maxq.front().is_some_and(|&j| j < left) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&j| j < left) {
            minq.pop_front();
        }
        if let (Some(&hi), Some(&lo)) = (maxq.front(), minq.front()) {
            best = best.max(values[hi] - values[lo]);
        }
    }
    best
}

/// Grid fine enough for [`modulus_omega`] at `delta`: uniform with at
/// least 1025 points and spacing at most `delta / 20`.
pub fn modulus_grid_for(delta: f64) -> Result<Grid, AnalysisError> {
    if !(delta > 0.0) {
        return Err(AnalysisError::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    let needed = (20.0 / delta.min(1.0)).ceil() as usize + 1;
    Grid::uniform(needed.max(1025))
}

/// Modulus of continuity `omega(f, delta)` estimated on `grid`.
pub fn modulus_omega(f: &dyn UnivariateFn, delta: f64, grid: &Grid) -> Result<ModulusEstimate, AnalysisError> {
    if !(delta > 0.0) {
        return Err(AnalysisError::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    let h = grid.max_spacing();
    if h > delta / 20.0 * (1.0 + 1e-9) {
        return Err(AnalysisError::Resolution { h, delta });
    }
    let values: Vec<f64> = grid.points().iter().map(|&x| f.value(x)).collect();
    let value = window_oscillation(grid.points(), &values, delta);
    let coarse_pts: Vec<f64> = grid.points().iter().step_by(2).copied().collect();
    let coarse_vals: Vec<f64> = values.iter().step_by(2).copied().collect();
    let coarse = window_oscillation(&coarse_pts, &coarse_vals, delta);
    Ok(ModulusEstimate { value, coarse })
}

/// [`modulus_omega`] on [`modulus_grid_for`]`(delta)`.
pub fn omega(f: &dyn UnivariateFn, delta: f64) -> Result<f64, AnalysisError> {
    Ok(modulus_omega(f, delta, &modulus_grid_for(delta)?)?.value)
}

fn binomial(r: u32, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (r - i) as f64 / (i + 1) as f64)
}

/// `Delta_h^r f(x) = sum_j (-1)^(r-j) C(r, j) f(x + j h)`.
pub fn forward_difference(f: &dyn UnivariateFn, r: u32, h: f64, x: f64) -> f64 {
    (0..=r)
        .map(|j| {
            let sign = if (r - j).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * binomial(r, j) * f.value(x + j as f64 * h)
        })
        .sum()
}

struct DifferencePower<'a> {
    f: &'a dyn UnivariateFn,
    r: u32,
    h: f64,
    p: f64,
    kinks: Vec<f64>,
}

impl UnivariateFn for DifferencePower<'_> {
    fn value(&self, x: f64) -> f64 {
        forward_difference(self.f, self.r, self.h, x).abs().powf(self.p)
    }

    fn kinks(&self) -> &[f64] {
        &self.kinks
    }
}

/// `omega_r(f, t)_p = sup_{0 < h <= t} ||Delta_h^r f||_p` over `[0, 1 - r h]`,
/// with `h` running over a geometric net (ratio `2^(-1/2)`) from `t` down to
/// the grid spacing.
pub fn modulus_omega_r(
    f: &dyn UnivariateFn,
    r: u32,
    t: f64,
    p: f64,
    grid: &Grid,
    rule: &QuadratureRule,
) -> Result<f64, AnalysisError> {
    if r < 1 {
        return Err(AnalysisError::InvalidInput("order r must be >= 1".into()));
    }
    if !(t > 0.0 && r as f64 * t <= 1.0) {
        return Err(AnalysisError::InvalidInput(format!("need 0 < r t <= 1, got r = {r}, t = {t}")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(AnalysisError::InvalidInput(format!("p must lie in [1, inf), got {p}")));
    }
    let spacing = grid.max_spacing();
    if spacing > t / 20.0 * (1.0 + 1e-9) {
        return Err(AnalysisError::Resolution { h: spacing, delta: t });
    }
    let mut best = 0.0_f64;
    let mut h = t;
    while h >= spacing {
        let end = 1.0 - r as f64 * h;
        let kinks: Vec<f64> = (0..=r)
            .flat_map(|j| f.kinks().iter().map(move |k| k - j as f64 * h))
            .filter(|&k| k > 0.0 && k < end)
            .collect();
        let mut kinks = kinks;
        kinks.sort_by(f64::total_cmp);
        let g = DifferencePower { f, r, h, p, kinks };
        let s = rule.integrate(&g, 0.0, end)?;
        best = best.max(s.max(0.0).powf(1.0 / p));
        h *= std::f64::consts::FRAC_1_SQRT_2;
    }
    Ok(best)
}
