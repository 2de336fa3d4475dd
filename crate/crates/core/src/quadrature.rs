//! Composite Gauss–Legendre quadrature with adaptive bisection.

use crate::funcexpr::UnivariateFn;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("no convergence on [{a}, {b}] after {depth} bisections, residual {residual:e}")]
    NonConvergence { a: f64, b: f64, depth: u32, residual: f64 },
    #[error("integrand is not finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("invalid quadrature rule: {0}")]
    InvalidRule(String),
}

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute_gauss_legendre(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussLegendre { nodes, weights }
}

/// Nodes and weights for `order` points, computed once per order.
pub fn gauss_legendre(order: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(order)
        .or_insert_with(|| Arc::new(compute_gauss_legendre(order)))
        .clone()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Maximum bisection depth.
    pub max_depth: u32,
    /// Absolute tolerance per panel.
    pub tol: f64,
    /// Forced panel boundaries.
    pub kink_points: Vec<f64>,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule { order: 16, max_depth: 30, tol: 1e-12, kink_points: Vec::new() }
    }
}

struct Panel {
    sum: f64,
    abs_sum: f64,
}

impl QuadratureRule {
    pub fn with_order(order: usize) -> Self {
        QuadratureRule { order, ..Default::default() }
    }

    pub fn with_kinks(mut self, kinks: &[f64]) -> Self {
        self.kink_points.extend_from_slice(kinks);
        self.kink_points.sort_by(f64::total_cmp);
        self.kink_points.dedup();
        self
    }

    pub fn validate(&self) -> Result<(), QuadError> {
        if self.order < 2 {
            return Err(QuadError::InvalidRule(format!("order must be >= 2, got {}", self.order)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(QuadError::InvalidRule(format!("tol must be positive, got {}", self.tol)));
        }
        if self.kink_points.iter().any(|k| !(0.0..=1.0).contains(k))
            || self.kink_points.windows(2).any(|w| w[0] > w[1])
        {
            return Err(QuadError::InvalidRule("kink points must be sorted and lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn panel<G: UnivariateFn + ?Sized>(&self, gl: &GaussLegendre, g: &G, a: f64, b: f64) -> Result<Panel, QuadError> {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let (mut sum, mut abs_sum) = (0.0, 0.0);
        for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
            let t = mid + half * x;
            let v = g.value(t);
            if !v.is_finite() {
                return Err(QuadError::NonFinite { t });
            }
            sum += w * v;
            abs_sum += w * v.abs();
        }
        Ok(Panel { sum: sum * half, abs_sum: abs_sum * half })
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive<G: UnivariateFn + ?Sized>(
        &self,
        gl: &GaussLegendre,
        g: &G,
        a: f64,
        b: f64,
        whole: Panel,
        depth: u32,
        tol: f64,
    ) -> Result<f64, QuadError> {
        let m = 0.5 * (a + b);
        let left = self.panel(gl, g, a, m)?;
        let right = self.panel(gl, g, m, b)?;
        let refined = left.sum + right.sum;
        let diff = (refined - whole.sum).abs();
        // Below this the two estimates differ only by rounding.
        let floor = 64.0 * f64::EPSILON * (left.abs_sum + right.abs_sum);
        if diff <= tol.max(floor) {
            return Ok(refined);
        }
        if depth >= self.max_depth || m <= a || m >= b {
            // Halving the tolerance per level asks the innermost panel at a
            // cusp for far more than the whole integral needs. A residual
            // below a tenth of the global tolerance is accepted.
            if diff <= 0.1 * self.tol {
                return Ok(refined);
            }
            return Err(QuadError::NonConvergence { a, b, depth, residual: diff });
        }
        let l = self.adaptive(gl, g, a, m, left, depth + 1, 0.5 * tol)?;
        let r = self.adaptive(gl, g, m, b, right, depth + 1, 0.5 * tol)?;
        Ok(l + r)
    }

    fn smooth_piece<G: UnivariateFn + ?Sized>(&self, gl: &GaussLegendre, g: &G, a: f64, b: f64) -> Result<f64, QuadError> {
        if a == b {
            return Ok(0.0);
        }
        let whole = self.panel(gl, g, a, b)?;
        self.adaptive(gl, g, a, b, whole, 0, self.tol)
    }

    /// `int_a^b g`, split at the rule's kink points and the integrand's
    /// own kinks.
    pub fn integrate<G: UnivariateFn + ?Sized>(&self, g: &G, a: f64, b: f64) -> Result<f64, QuadError> {
        if !(a <= b && a.is_finite() && b.is_finite()) {
            return Err(QuadError::InvalidInterval { a, b });
        }
        let gl = gauss_legendre(self.order);
        let mut cuts: Vec<f64> = self
            .kink_points
            .iter()
            .chain(g.kinks())
            .copied()
            .filter(|&k| k > a && k < b)
            .collect();
        if cuts.is_empty() {
            return self.smooth_piece(&gl, g, a, b);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = 0.0;
        let mut lo = a;
        for &c in cuts.iter().chain(std::iter::once(&b)) {
            total += self.smooth_piece(&gl, g, lo, c)?;
            lo = c;
        }
        Ok(total)
    }

    /// `(n+1) int g` over the cell `[k/(n+1), (k+1)/(n+1)]`.
    pub fn cell_average<G: UnivariateFn + ?Sized>(&self, g: &G, n: u64, k: u64) -> Result<f64, QuadError> {
        if k > n {
            return Err(QuadError::InvalidInterval { a: k as f64, b: n as f64 });
        }
        let np1 = (n + 1) as f64;
        let (a, b) = (k as f64 / np1, (k + 1) as f64 / np1);
        Ok(np1 * self.integrate(g, a, b)?)
    }

    /// Integrals over consecutive intervals `[points[i], points[i+1]]`.
    pub fn segment_integrals<G: UnivariateFn + ?Sized>(&self, g: &G, points: &[f64]) -> Result<Vec<f64>, QuadError> {
        points.windows(2).map(|w| self.integrate(g, w[0], w[1])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::bernstein_basis;

    #[test]
    fn nodes_are_symmetric_and_weights_sum_to_two() {
        for order in [2, 3, 7, 16, 32, 64] {
            let gl = gauss_legendre(order);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "order {order}: {s}");
            for i in 0..order {
                assert_eq!(gl.nodes[i], -gl.nodes[order - 1 - i]);
            }
            assert!(gl.nodes.windows(2).all(|w| w[0] < w[1]));
        }
        let gl = gauss_legendre(2);
        assert!((gl.nodes[1] - 1.0 / 3f64.sqrt()).abs() <= f64::EPSILON);
    }

    #[test]
    fn exactness() {
        let rule = QuadratureRule::default();
        assert!((rule.integrate(&|_t: f64| 1.0, 0.0, 1.0).unwrap() - 1.0).abs() <= 2.0 * f64::EPSILON);
        let cube = rule.integrate(&|t: f64| t * t * t, 0.0, 1.0).unwrap();
        assert!((cube - 0.25).abs() < 1e-15);
        let p = rule.integrate(&|t: f64| bernstein_basis(4, 2, t), 0.0, 1.0).unwrap();
        assert!((p - 0.2).abs() < 1e-15);
        // degree 2*order - 1 with a two-point rule
        let two = QuadratureRule::with_order(2);
        let gl = gauss_legendre(2);
        let s: f64 = gl.nodes.iter().zip(&gl.weights).map(|(x, w)| w * x.powi(3)).sum();
        assert!(s.abs() < 1e-16);
        assert!((two.integrate(&|t: f64| t * t, 0.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cell_average_examples() {
        let rule = QuadratureRule::default();
        assert!((rule.cell_average(&|_t: f64| 3.5, 7, 3).unwrap() - 3.5).abs() < 1e-14);
        assert!((rule.cell_average(&|t: f64| t, 1, 0).unwrap() - 0.25).abs() < 1e-16);
    }

    #[test]
    fn kinks_split_panels() {
        let rule = QuadratureRule::default();
        let f = |t: f64| (t - 0.3).abs();
        // Adaptive path finds it without help, the kink list makes it exact.
        let exact = 0.5 * (0.09 + 0.49);
        let adaptive = rule.integrate(&f, 0.0, 1.0).unwrap();
        assert!((adaptive - exact).abs() < 1e-11);
        let split = rule.clone().with_kinks(&[0.3]).integrate(&f, 0.0, 1.0).unwrap();
        assert!((split - exact).abs() < 1e-15);
    }

    #[test]
    fn interior_cusp() {
        // |t - 0.3|^0.2 has an unbounded derivative that the kink
        // detection does not see; the panels around it bottom out with a
        // negligible residual.
        let rule = QuadratureRule::default();
        let f = |t: f64| (t - 0.3).abs().powf(0.2);
        let exact = (0.3f64.powf(1.2) + 0.7f64.powf(1.2)) / 1.2;
        assert!((rule.integrate(&f, 0.0, 1.0).unwrap() - exact).abs() < 1e-11);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let rule = QuadratureRule { max_depth: 3, ..Default::default() };
        let f = |t: f64| if t < 0.123_456 { 0.0 } else { 1.0 };
        match rule.integrate(&f, 0.0, 1.0) {
            Err(QuadError::NonConvergence { residual, .. }) => assert!(residual > 0.0),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            rule.integrate(&|t: f64| if t > 0.9 { f64::NAN } else { t }, 0.0, 1.0),
            Err(QuadError::NonFinite { .. })
        ));
    }

    #[test]
    fn cells_add_up() {
        let rule = QuadratureRule::default();
        let g = |t: f64| (3.0 * t).sin() + t.exp();
        let whole = rule.integrate(&g, 0.0, 1.0).unwrap();
        for n in [1u64, 7, 64, 256] {
            let s: f64 = (0..=n).map(|k| rule.cell_average(&g, n, k).unwrap()).sum::<f64>() / (n + 1) as f64;
            assert!((s - whole).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn validation() {
        assert!(QuadratureRule::with_order(1).validate().is_err());
        assert!(QuadratureRule { tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(QuadratureRule { kink_points: vec![0.7, 0.2], ..Default::default() }.validate().is_err());
        assert!(QuadratureRule::default().validate().is_ok());
    }
}
