use super::{AnalysisError, Grid};
use crate::basis::LogWeight;
use crate::funcexpr::UnivariateFn;
use crate::quadrature::QuadratureRule;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormKind {
    /// Maximum of `|f|` over the grid.
    SupGrid,
    /// `(int_0^1 |f|^p)^(1/p)`.
    Lp { p: f64 },
    /// `(int_0^1 |f / ln_mu|^p)^(1/p)`.
    LpMu { p: f64, mu: f64 },
}

impl NormKind {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        match *self {
            NormKind::SupGrid => Ok(()),
            NormKind::Lp { p } | NormKind::LpMu { p, .. } if !(p >= 1.0 && p.is_finite()) => {
                Err(AnalysisError::InvalidInput(format!("p must lie in [1, inf), got {p}")))
            }
            NormKind::LpMu { mu, .. } => LogWeight::new(mu).map(|_| ()).map_err(Into::into),
            NormKind::Lp { .. } => Ok(()),
        }
    }
}

/// Sup norm of precomputed samples.
pub fn norm_values(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Power<'a> {
    f: &'a dyn UnivariateFn,
    p: f64,
    weight: Option<LogWeight>,
}

impl UnivariateFn for Power<'_> {
    fn value(&self, x: f64) -> f64 {
        let mut v = self.f.value(x);
        if let Some(w) = self.weight {
            v /= w.at(x);
        }
        let a = v.abs();
        if self.p == 1.0 {
            a
        } else if self.p == 2.0 {
            a * a
        } else {
            a.powf(self.p)
        }
    }

    fn kinks(&self) -> &[f64] {
        self.f.kinks()
    }
}

/// The requested norm of `f`. `grid` is only used by
/// [`NormKind::SupGrid`]; integral norms use `rule`, split at the kinks of
/// `f`.
pub fn norm(
    f: &dyn UnivariateFn,
    kind: NormKind,
    grid: &Grid,
    rule: &QuadratureRule,
) -> Result<f64, AnalysisError> {
    kind.validate()?;
    let (p, weight) = match kind {
        NormKind::SupGrid => {
            return Ok(grid.points().iter().fold(0.0, |m, &x| m.max(f.value(x).abs())));
        }
        NormKind::Lp { p } => (p, None),
        NormKind::LpMu { p, mu } => (p, Some(LogWeight::new(mu)?)),
    };
    let integrand = Power { f, p, weight };
    let s = rule.integrate(&integrand, 0.0, 1.0)?;
    Ok(s.max(0.0).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcexpr::resolve;

    #[test]
    fn examples() {
        let w = LogWeight::new(1.0).unwrap();
        let rule = QuadratureRule::default();
        let grid = Grid::uniform(257).unwrap();
        let lnmu = resolve("lnmu", &w).unwrap();
        for p in [1.0, 2.0, 3.5] {
            let v = norm(&lnmu, NormKind::LpMu { p, mu: 1.0 }, &grid, &rule).unwrap();
            assert!((v - 1.0).abs() < 1e-14);
        }
        let e1 = resolve("e1", &w).unwrap();
        let v = norm(&e1, NormKind::Lp { p: 2.0 }, &grid, &rule).unwrap();
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-10);
        assert_eq!(norm(&e1, NormKind::SupGrid, &grid, &rule).unwrap(), 1.0);
        assert!(NormKind::Lp { p: 0.5 }.validate().is_err());
        assert!(NormKind::LpMu { p: 2.0, mu: 0.0 }.validate().is_err());
    }

    #[test]
    fn weighted_norm_equivalence() {
        let rule = QuadratureRule::default();
        let grid = Grid::uniform(257).unwrap();
        for mu in [0.5, 1.0, 3.0] {
            let w = LogWeight::new(mu).unwrap();
            for entry in crate::funcexpr::registry() {
                let f = resolve(entry.name, &w).unwrap();
                for p in [1.0, 2.0, 4.0] {
                    let plain = norm(&f, NormKind::Lp { p }, &grid, &rule).unwrap();
                    let weighted = norm(&f, NormKind::LpMu { p, mu }, &grid, &rule).unwrap();
                    assert!(plain / w.upper() <= weighted * (1.0 + 1e-12));
                    assert!(weighted <= plain / w.lower() * (1.0 + 1e-12));
                }
            }
        }
    }
}
