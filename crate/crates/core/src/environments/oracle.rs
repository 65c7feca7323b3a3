//! Hindsight benchmarks for the two regret notions.

use rayon::prelude::*;

use super::noise::NoiseModel;
use crate::error::{PricingError, Result};
use crate::grid::{dot, floor_round};
use crate::policy_space::ParameterGrid;

/// Best fixed linear policy on a realized history.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleFit {
    pub beta: Vec<f64>,
    pub total: f64,
    /// Upper bound on how much the continuous maximizer could beat `total`:
    /// rounding any `beta` down to the grid lowers every price by at most
    /// `max ||x|| * sqrt(d) * step`, and a lower price still sells.
    pub resolution_gap: f64,
}

/// Exhaustive search over `grid` for the `beta` maximizing
/// `sum_t p_t 1(p_t <= y_t)` with `p_t = x_t . beta`, floored to `price_step`
/// when one is given. Ties go to the lexicographically smallest `beta`.
pub fn best_fixed_beta(history: &[(Vec<f64>, f64)], grid: &ParameterGrid, price_step: Option<f64>) -> Result<OracleFit> {
    if history.is_empty() {
        return Err(PricingError::invalid("hindsight oracle needs a nonempty history"));
    }
    if grid.is_empty() || history.iter().any(|(x, _)| x.len() != grid.dim) {
        return Err(PricingError::invalid("history contexts do not match the grid dimension"));
    }
    let totals: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let beta = grid.vector(i);
            let mut total = 0.0;
            for (x, y) in history {
                let mut p = dot(x, &beta);
                if let Some(step) = price_step {
                    p = floor_round(p, step).unwrap_or(0.0);
                }
                if p <= *y {
                    total += p;
                }
            }
            total
        })
        .collect();
    let mut best = 0;
    for (i, &t) in totals.iter().enumerate() {
        if t > totals[best] {
            best = i;
        }
    }
    let max_norm = history.iter().map(|(x, _)| crate::grid::norm2(x)).fold(0.0, f64::max);
    let gap = history.len() as f64 * max_norm * (grid.dim as f64).sqrt() * grid.delta;
    Ok(OracleFit { beta: grid.vector(best), total: totals[best], resolution_gap: gap })
}

/// Per-round revenue maximizer over `[0, vmax]` under noiseless valuation `u` and noise `noise`.
///
/// Closed form per segment for discrete CDFs and the uniform and point-mass
/// models, the greedy price for Gaussian noise, dense search otherwise.
pub fn per_round_optimal(u: f64, noise: &NoiseModel, vmax: f64) -> (f64, f64) {
    noise.optimal_price(u, vmax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::greedy::greedy_price_j;
    use crate::policy_space::enumerate_parameter_grid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_round() {
        let grid = enumerate_parameter_grid(0.1, 2).unwrap();
        let fit = best_fixed_beta(&[(vec![1.0, 0.0], 0.9)], &grid, None).unwrap();
        assert_abs_diff_eq!(fit.beta[0], 0.9, epsilon = 1e-12);
        assert_eq!(fit.beta[1], 0.0);
        assert_abs_diff_eq!(fit.total, 0.9, epsilon = 1e-12);
    }

    #[test]
    fn nothing_sellable() {
        let grid = enumerate_parameter_grid(0.25, 2).unwrap();
        let hist: Vec<_> = (0..5).map(|_| (vec![0.6, 0.8], -0.1)).collect();
        let fit = best_fixed_beta(&hist, &grid, None).unwrap();
        assert_eq!(fit.total, 0.0);
        assert_eq!(fit.beta, vec![0.0, 0.0]);
    }

    #[test]
    fn constant_valuation() {
        let grid = enumerate_parameter_grid(0.25, 1).unwrap();
        let hist: Vec<_> = (0..40).map(|_| (vec![1.0], 0.75)).collect();
        let fit = best_fixed_beta(&hist, &grid, None).unwrap();
        assert_eq!(fit.beta, vec![0.75]);
        assert_abs_diff_eq!(fit.total, 30.0, epsilon = 1e-12);
        assert!(best_fixed_beta(&[], &grid, None).is_err());
    }

    #[test]
    fn per_round_examples() {
        let (v, val) = per_round_optimal(0.5, &NoiseModel::Uniform, 2.0);
        assert_abs_diff_eq!(v, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(val, 0.28125, epsilon = 1e-12);
        let (v, _) = per_round_optimal(0.8, &NoiseModel::Gaussian { sigma: 0.25 }, 3.0);
        assert_abs_diff_eq!(v, greedy_price_j(0.8, 0.25), epsilon = 1e-15);
        let (v, val) = per_round_optimal(0.6, &NoiseModel::PointMass { at: 0.0 }, 2.0);
        assert_abs_diff_eq!(v, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(val, 0.6, epsilon = 1e-15);
    }
}
