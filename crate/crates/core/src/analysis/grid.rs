use super::AnalysisError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Uniform,
    Chebyshev,
    Custom,
}

/// Strictly increasing sample points in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    kind: GridKind,
}

impl Grid {
    /// `m` equispaced points including both endpoints of `[0, 1]`.
    pub fn uniform(m: usize) -> Result<Grid, AnalysisError> {
        Grid::uniform_on(0.0, 1.0, m)
    }

    /// `m` equispaced points including both endpoints of `[a, b]`.
    pub fn uniform_on(a: f64, b: f64, m: usize) -> Result<Grid, AnalysisError> {
        if m < 2 {
            return Err(AnalysisError::InvalidInput(format!("a grid needs at least 2 points, got {m}")));
        }
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(AnalysisError::InvalidInput(format!("[{a}, {b}] is not a subinterval of [0, 1]")));
        }
        let last = (m - 1) as f64;
        let points = (0..m)
            .map(|i| {
                if i == m - 1 {
                    b
                } else {
                    a + (b - a) * (i as f64 / last)
                }
            })
            .collect();
        Ok(Grid { points, kind: GridKind::Uniform })
    }

    /// Chebyshev–Lobatto points mapped to `[0, 1]`.
    pub fn chebyshev(m: usize) -> Result<Grid, AnalysisError> {
        if m < 2 {
            return Err(AnalysisError::InvalidInput(format!("a grid needs at least 2 points, got {m}")));
        }
        let last = (m - 1) as f64;
        let mut points: Vec<f64> = (0..m)
            .map(|i| 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / last).cos()))
            .collect();
        points[0] = 0.0;
        points[m - 1] = 1.0;
        Ok(Grid { points, kind: GridKind::Chebyshev })
    }

    pub fn custom(points: Vec<f64>) -> Result<Grid, AnalysisError> {
        if points.is_empty() {
            return Err(AnalysisError::InvalidInput("grid is empty".into()));
        }
        if points.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(AnalysisError::InvalidInput("grid points must lie in [0, 1]".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AnalysisError::InvalidInput("grid points must be strictly increasing".into()));
        }
        Ok(Grid { points, kind: GridKind::Custom })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest gap between neighbouring points.
    pub fn max_spacing(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// `true` if both 0 and 1 are grid points.
    pub fn has_endpoints(&self) -> bool {
        self.points.first() == Some(&0.0) && self.points.last() == Some(&1.0)
    }

    /// Every other point, keeping the last one.
    pub fn coarsened(&self) -> Grid {
        let mut points: Vec<f64> = self.points.iter().step_by(2).copied().collect();
        let last = *self.points.last().expect("grid is nonempty");
        if points.last() != Some(&last) {
            points.push(last);
        }
        Grid { points, kind: self.kind }
    }
}
