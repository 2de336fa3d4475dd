use super::{AnalysisError, Grid};
use crate::funcexpr::UnivariateFn;
use crate::quadrature::QuadratureRule;

/// Levels of dyadic refinement `x +- 2^-j` probed next to `x`.
const DYADIC_LEVELS: i32 = 40;

struct Abs<'a> {
    f: &'a dyn UnivariateFn,
}

impl UnivariateFn for Abs<'_> {
    fn value(&self, x: f64) -> f64 {
        self.f.value(x).abs()
    }

    fn kinks(&self) -> &[f64] {
        self.f.kinks()
    }
}

/// Hardy–Littlewood maximal function
/// `M(f; x) = sup_{t != x} (1 / (t - x)) int_x^t |f|` on `[0, 1]`, with `t`
/// running over the grid plus `x +- 2^-j`. Grid averages come from a
/// cumulative integral of `|f|` built once; the dyadic ones are integrated
/// directly so they stay accurate as the interval shrinks.
pub struct MaximalFunction<'a> {
    f: &'a dyn UnivariateFn,
    rule: QuadratureRule,
    points: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<'a> MaximalFunction<'a> {
    pub fn new(f: &'a dyn UnivariateFn, grid: &Grid, rule: &QuadratureRule) -> Result<Self, AnalysisError> {
        let points = grid.points().to_vec();
        let abs = Abs { f };
        let pieces = rule.segment_integrals(&abs, &points)?;
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for p in pieces {
            cumulative.push(cumulative.last().expect("nonempty") + p);
        }
        Ok(MaximalFunction { f, rule: rule.clone(), points, cumulative })
    }

    fn integral(&self, a: f64, b: f64) -> Result<f64, AnalysisError> {
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        Ok(sign * self.rule.integrate(&Abs { f: self.f }, lo, hi)?)
    }

    pub fn at(&self, x: f64) -> Result<f64, AnalysisError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(AnalysisError::Domain(format!("x = {x} is outside [0, 1]")));
        }
        // Cumulative integral up to x, anchored at the nearest grid point.
        let j = match self.points.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == self.points.len() => i - 1,
            Err(i) => {
                if x - self.points[i - 1] <= self.points[i] - x {
                    i - 1
                } else {
                    i
                }
            }
        };
        let cx = self.cumulative[j] + self.integral(self.points[j], x)?;
        let mut best = 0.0_f64;
        for (t, c) in self.points.iter().zip(&self.cumulative) {
            if *t != x {
                best = best.max((c - cx) / (t - x));
            }
        }
        for level in 1..=DYADIC_LEVELS {
            let h = 2f64.powi(-level);
            for t in [x - h, x + h] {
                if (0.0..=1.0).contains(&t) {
                    best = best.max(self.integral(x, t)? / (t - x));
                }
            }
        }
        Ok(best)
    }
}

/// One-shot [`MaximalFunction::at`].
pub fn maximal_function(
    f: &dyn UnivariateFn,
    x: f64,
    grid: &Grid,
    rule: &QuadratureRule,
) -> Result<f64, AnalysisError> {
    MaximalFunction::new(f, grid, rule)?.at(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::LogWeight;
    use crate::funcexpr::resolve;

    #[test]
    fn constants_and_limits() {
        let grid = Grid::uniform(257).unwrap();
        let rule = QuadratureRule::default();
        let c = |x: f64| -2.5 + 0.0 * x;
        for x in [0.0, 0.3, 1.0] {
            let m = maximal_function(&c, x, &grid, &rule).unwrap();
            assert!((m - 2.5).abs() < 1e-12);
        }
        let w = LogWeight::new(1.0).unwrap();
        for name in ["sin_pi", "hat", "x_lnmu", "abs_half"] {
            let f = resolve(name, &w).unwrap();
            let m = MaximalFunction::new(&f, &grid, &rule).unwrap();
            for x in [0.0, 0.1, 0.5, 0.77, 1.0] {
                assert!(m.at(x).unwrap() >= f.eval(x).abs() - 1e-6, "{name} at {x}");
            }
        }
    }

    #[test]
    fn scaling_and_sublinearity() {
        let grid = Grid::uniform(257).unwrap();
        let rule = QuadratureRule::default();
        let w = LogWeight::new(1.0).unwrap();
        let f = resolve("sin_pi", &w).unwrap();
        let g = resolve("abs_half", &w).unwrap();
        let scaled = |x: f64| -3.0 * f.eval(x);
        let sum = |x: f64| f.eval(x) - g.eval(x);
        for x in [0.05, 0.4, 0.9] {
            let mf = maximal_function(&f, x, &grid, &rule).unwrap();
            let mg = maximal_function(&g, x, &grid, &rule).unwrap();
            let ms = maximal_function(&scaled, x, &grid, &rule).unwrap();
            assert!((ms - 3.0 * mf).abs() < 1e-10);
            let msum = maximal_function(&sum, x, &grid, &rule).unwrap();
            assert!(msum <= mf + mg + 1e-9);
        }
    }
}
