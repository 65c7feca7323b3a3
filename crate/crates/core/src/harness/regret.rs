//! The two regret notions, computed from a finished run.

use crate::environments::NoiseModel;
use crate::error::{PricingError, Result};
use crate::grid::{dot, expected_revenue};

/// Per-round and cumulative regret series.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries {
    pub per_round: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretSeries {
    pub fn from_per_round(per_round: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = per_round
            .iter()
            .map(|r| {
                acc += r;
                acc
            })
            .collect();
        Self { per_round, cumulative }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// Expected-revenue regret under the true model: for each round the best
/// expected revenue over `[0, vmax]` minus the posted price's expected revenue.
pub fn compute_lv_regret(
    prices: &[f64],
    contexts: &[Vec<f64>],
    theta_star: &[f64],
    noise: &NoiseModel,
    vmax: f64,
) -> Result<RegretSeries> {
    if prices.len() != contexts.len() {
        return Err(PricingError::invalid("one price per context is required"));
    }
    let per_round = prices
        .iter()
        .zip(contexts)
        .map(|(&v, x)| {
            let u = dot(x, theta_star);
            let (_, best) = noise.optimal_price(u, vmax);
            best - expected_revenue(v, u, noise)
        })
        .collect();
    Ok(RegretSeries::from_per_round(per_round))
}

/// Realized comparator reward minus realized agent reward on the same valuation draw.
/// Individual rounds can be negative and are kept as they are.
pub fn compute_empirical_exante_regret(
    prices: &[f64],
    comparator_prices: &[f64],
    valuations: &[f64],
) -> Result<RegretSeries> {
    if prices.len() != comparator_prices.len() || prices.len() != valuations.len() {
        return Err(PricingError::invalid("prices, comparator prices and valuations differ in length"));
    }
    let realized = |p: f64, y: f64| if p <= y { p } else { 0.0 };
    let per_round = prices
        .iter()
        .zip(comparator_prices)
        .zip(valuations)
        .map(|((&v, &c), &y)| realized(c, y) - realized(v, y))
        .collect();
    Ok(RegretSeries::from_per_round(per_round))
}
