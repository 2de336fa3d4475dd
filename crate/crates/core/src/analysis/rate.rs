use super::AnalysisError;
use serde::{Deserialize, Serialize};

/// Least-squares fit of `ln err = log_constant + exponent * ln n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub log_constant: f64,
    pub r_squared: f64,
    /// Standard error of the slope (0 for an exact fit or two points).
    pub stderr: f64,
    /// The errors span less than two decades and `r_squared < 0.9`.
    pub low_confidence: bool,
}

pub fn rate_fit(ns: &[u64], errs: &[f64]) -> Result<RateFit, AnalysisError> {
    if ns.len() != errs.len() {
        return Err(AnalysisError::InvalidInput(format!(
            "{} degrees but {} errors",
            ns.len(),
            errs.len()
        )));
    }
    if ns.len() < 3 {
        return Err(AnalysisError::InvalidInput(format!("need at least 3 points, got {}", ns.len())));
    }
    if let Some(e) = errs.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(AnalysisError::InvalidInput(format!("errors must be positive and finite, got {e}")));
    }
    if ns.contains(&0) {
        return Err(AnalysisError::InvalidInput("degrees must be positive".into()));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(AnalysisError::InvalidInput("degrees must not all be equal".into()));
    }
    let exponent = sxy / sxx;
    let log_constant = my - exponent * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (log_constant + exponent * x);
            r * r
        })
        .sum();
    // Constant errors are fit exactly by a flat line.
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * m { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let stderr = if ns.len() > 2 { (sse / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    let (lo, hi) = errs
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let low_confidence = (hi / lo) < 100.0 && r_squared < 0.9;
    Ok(RateFit { exponent, log_constant, r_squared, stderr, low_confidence })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let ns = [16u64, 32, 64, 128, 256];
        let inv: Vec<f64> = ns.iter().map(|&n| 3.0 / n as f64).collect();
        let f = rate_fit(&ns, &inv).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
        assert!((f.log_constant - 3f64.ln()).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(!f.low_confidence);
        let sqrt: Vec<f64> = ns.iter().map(|&n| 1.0 / (n as f64).sqrt()).collect();
        assert!((rate_fit(&ns, &sqrt).unwrap().exponent + 0.5).abs() < 1e-12);
        let flat = rate_fit(&ns, &[0.2; 5]).unwrap();
        assert!(flat.exponent.abs() < 1e-12);
        assert_eq!(flat.r_squared, 1.0);
    }

    #[test]
    fn noisy_narrow_data_is_flagged() {
        let f = rate_fit(&[10, 20, 40, 80], &[1.0, 1.5, 0.9, 1.4]).unwrap();
        assert!(f.low_confidence);
        assert!(f.stderr > 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rate_fit(&[1, 2], &[1.0, 0.5]).is_err());
        assert!(rate_fit(&[1, 2, 3], &[1.0, 0.0, 0.5]).is_err());
        assert!(rate_fit(&[4, 4, 4], &[1.0, 0.5, 0.2]).is_err());
        assert!(rate_fit(&[1, 2, 3], &[1.0, 0.5]).is_err());
    }
}
