//! Log-log regression of regret against the horizon.

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Indices of input points dropped for nonpositive regret.
    pub excluded: Vec<usize>,
}

/// Ordinary least squares of `ln(regret)` on `ln(T)`. Points with nonpositive
/// regret are excluded and listed; at least three must remain.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let mut excluded = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &(t, r)) in points.iter().enumerate() {
        if t > 0.0 && r > 0.0 && r.is_finite() {
            xs.push(t.ln());
            ys.push(r.ln());
        } else {
            excluded.push(i);
        }
    }
    if xs.len() < 3 {
        return Err(PricingError::invalid(format!(
            "slope fit needs at least 3 points with positive regret, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(PricingError::invalid("slope fit needs at least two distinct horizons"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit { slope, intercept: my - slope * mx, r_squared, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<_> = (9..15).map(|k| {
            let t = 2f64.powi(k);
            (t, 3.0 * t.powf(2.0 / 3.0))
        }).collect();
        let fit = fit_loglog_slope(&pts).unwrap();
        assert!((fit.slope - 2.0 / 3.0).abs() < 1e-9);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let lin: Vec<_> = (1..6).map(|k| (k as f64 * 100.0, 0.5 * k as f64 * 100.0)).collect();
        assert!((fit_loglog_slope(&lin).unwrap().slope - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nonpositive_points_are_excluded() {
        let pts = [(10.0, 1.0), (20.0, -1.0), (40.0, 4.0), (80.0, 8.0), (160.0, 0.0)];
        let fit = fit_loglog_slope(&pts).unwrap();
        assert_eq!(fit.excluded, vec![1, 4]);
        assert!(fit_loglog_slope(&pts[..2]).is_err());
    }
}
