//! Sale-session generators and hindsight oracles.
//!
//! Every environment follows the same round protocol: [`SaleEnvironment::next_context`]
//! reveals `x_t` (and privately draws the round's valuation), then
//! [`SaleEnvironment::post_price`] reports whether the posted price sold.

pub mod bump;
pub mod greedy;
pub mod linear;
pub mod noise;
pub mod oracle;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use bump::{bump, bump_shape, rescaled_bump, sample_interval_chain, BumpEnv, BumpInstance, BumpShape};
pub use greedy::{greedy_price_j, inverse_j, GaussianGreedyEnv};
pub use linear::{make_lv_env, LinearValuationEnv};
pub use noise::NoiseModel;
pub use oracle::{best_fixed_beta, per_round_optimal, OracleFit};

/// One seller facing a stream of buyers.
pub trait SaleEnvironment {
    fn dim(&self) -> usize;

    /// Starts round `t` and returns its context.
    fn next_context(&mut self, t: usize) -> Vec<f64>;

    /// Posts `price` in the current round; returns whether it sold.
    fn post_price(&mut self, t: usize, price: f64) -> bool;

    /// The current round's valuation, for environments that draw one.
    fn realized_valuation(&self) -> Option<f64> {
        None
    }

    /// `P[sold]` at `price` in the current round.
    fn sale_probability(&self, price: f64) -> f64;

    /// Revenue-maximizing price over `[0, vmax]` in the current round and its expected revenue.
    fn optimal_price(&self, vmax: f64) -> (f64, f64);

    /// Price of the fixed comparator policy, where the environment defines one.
    fn comparator_price(&self) -> Option<f64> {
        None
    }
}

/// Where contexts come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextSource {
    /// Uniform on the nonnegative part of the sphere of the given radius.
    Sphere { dim: usize, radius: f64 },
    /// A uniformly random standard basis vector.
    OneHot { dim: usize },
    /// A fixed sequence, cycled.
    Fixed(Vec<Vec<f64>>),
}

impl ContextSource {
    pub fn dim(&self) -> usize {
        match self {
            ContextSource::Sphere { dim, .. } | ContextSource::OneHot { dim } => *dim,
            ContextSource::Fixed(xs) => xs.first().map_or(0, Vec::len),
        }
    }

    /// Largest context norm the source can produce.
    pub fn max_norm(&self) -> f64 {
        match self {
            ContextSource::Sphere { radius, .. } => *radius,
            ContextSource::OneHot { .. } => 1.0,
            ContextSource::Fixed(xs) => xs.iter().map(|x| crate::grid::norm2(x)).fold(0.0, f64::max),
        }
    }

    /// Smallest `x . beta` over producible contexts, for nonnegative `beta`.
    pub fn min_inner_product(&self, beta: &[f64]) -> f64 {
        let min_coord = beta.iter().copied().fold(f64::INFINITY, f64::min);
        match self {
            ContextSource::Sphere { radius, .. } => radius * min_coord,
            ContextSource::OneHot { .. } => min_coord,
            ContextSource::Fixed(xs) => xs.iter().map(|x| crate::grid::dot(x, beta)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Checks dimension, nonnegativity and the norm bound `B`.
    pub fn validate(&self, bound: f64) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::PricingError::invalid(m.to_string()));
        if self.dim() == 0 {
            return bad("contexts must have positive dimension");
        }
        if let ContextSource::Fixed(xs) = self {
            let d = self.dim();
            if xs.iter().any(|x| x.len() != d || x.iter().any(|&c| !(c >= 0.0))) {
                return bad("fixed contexts must share one dimension and be nonnegative");
            }
        }
        if self.max_norm() > bound * (1.0 + 1e-12) {
            return bad("contexts exceed the norm bound B");
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Vec<f64> {
        match self {
            ContextSource::Sphere { dim, radius } => loop {
                let g: Vec<f64> = (0..*dim).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).collect();
                let n = crate::grid::norm2(&g);
                if n > 1e-300 {
                    break g.into_iter().map(|c| (radius * c / n).max(0.0)).collect();
                }
            },
            ContextSource::OneHot { dim } => {
                let mut x = vec![0.0; *dim];
                x[rng.random_range(0..*dim)] = 1.0;
                x
            }
            ContextSource::Fixed(xs) => xs[t % xs.len()].clone(),
        }
    }
}

/// `T` standard basis vectors with uniformly random coordinate.
pub fn make_onehot_contexts(dim: usize, horizon: usize, seed: u64) -> crate::Result<Vec<Vec<f64>>> {
    if dim == 0 {
        return Err(crate::PricingError::invalid("dimension must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source = ContextSource::OneHot { dim };
    Ok((0..horizon).map(|t| source.draw(t, &mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn onehot_single_coordinate() {
        let xs = make_onehot_contexts(1, 20, 3).unwrap();
        assert!(xs.iter().all(|x| x == &[1.0]));
    }

    #[test]
    fn onehot_frequencies() {
        let xs = make_onehot_contexts(4, 100_000, 9).unwrap();
        for i in 0..4 {
            let freq = xs.iter().filter(|x| x[i] == 1.0).count() as f64 / xs.len() as f64;
            assert!((freq - 0.25).abs() <= 0.01, "coordinate {i}: {freq}");
        }
        assert!(xs.iter().all(|x| crate::grid::norm2(x) == 1.0));
        assert!(make_onehot_contexts(0, 5, 0).is_err());
    }

    #[test]
    fn sphere_contexts_are_admissible() {
        let src = ContextSource::Sphere { dim: 3, radius: 2.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 0..1000 {
            let x = src.draw(t, &mut rng);
            assert!(x.iter().all(|&c| c >= 0.0));
            assert!((crate::grid::norm2(&x) - 2.0).abs() < 1e-12);
        }
        assert!(src.validate(2.0).is_ok());
        assert!(src.validate(1.0).is_err());
    }
}
