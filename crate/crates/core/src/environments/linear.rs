use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::noise::NoiseModel;
use super::{ContextSource, SaleEnvironment};
use crate::error::{PricingError, Result};
use crate::grid::{dot, expected_revenue, norm2, sale_probability};

/// Valuations `y_t = x_t . theta* + N_t` with i.i.d. bounded noise.
#[derive(Debug, Clone)]
pub struct LinearValuationEnv {
    pub theta_star: Vec<f64>,
    pub noise: NoiseModel,
    pub bound: u32,
    contexts: ContextSource,
    rng: ChaCha8Rng,
    x: Vec<f64>,
    u: f64,
    y: f64,
}

/// Builds a linear-valuation environment after checking that `theta*`, the
/// noise and the contexts satisfy the model's assumptions.
pub fn make_lv_env(
    theta_star: Vec<f64>,
    noise: NoiseModel,
    contexts: ContextSource,
    bound: u32,
    seed: u64,
) -> Result<LinearValuationEnv> {
    if theta_star.is_empty() || theta_star.iter().any(|&c| !(c >= 0.0)) || norm2(&theta_star) > 1.0 + 1e-12 {
        return Err(PricingError::invalid("theta* must be nonnegative with norm at most 1"));
    }
    noise.validate()?;
    if !noise.is_bounded() {
        return Err(PricingError::invalid("linear-valuation noise must be supported on [-1, 1]"));
    }
    if bound == 0 {
        return Err(PricingError::invalid("context bound B must be positive"));
    }
    contexts.validate(bound as f64)?;
    if contexts.dim() != theta_star.len() {
        return Err(PricingError::invalid("context dimension differs from theta*"));
    }
    let dim = theta_star.len();
    Ok(LinearValuationEnv {
        theta_star,
        noise,
        bound,
        contexts,
        rng: ChaCha8Rng::seed_from_u64(seed),
        x: vec![0.0; dim],
        u: 0.0,
        y: 0.0,
    })
}

impl LinearValuationEnv {
    /// `x_t . theta*` for the current round.
    pub fn current_u(&self) -> f64 {
        self.u
    }

    pub fn current_context(&self) -> &[f64] {
        &self.x
    }

    /// Expected revenue of `price` in the current round under the true model.
    pub fn expected_revenue(&self, price: f64) -> f64 {
        expected_revenue(price, self.u, &self.noise)
    }
}

impl SaleEnvironment for LinearValuationEnv {
    fn dim(&self) -> usize {
        self.theta_star.len()
    }

    fn next_context(&mut self, t: usize) -> Vec<f64> {
        self.x = self.contexts.draw(t, &mut self.rng);
        self.u = dot(&self.x, &self.theta_star);
        self.y = self.u + self.noise.sample(&mut self.rng);
        self.x.clone()
    }

    fn post_price(&mut self, _t: usize, price: f64) -> bool {
        price <= self.y
    }

    fn realized_valuation(&self) -> Option<f64> {
        Some(self.y)
    }

    fn sale_probability(&self, price: f64) -> f64 {
        sale_probability(price, self.u, &self.noise)
    }

    fn optimal_price(&self, vmax: f64) -> (f64, f64) {
        self.noise.optimal_price(self.u, vmax)
    }
}
