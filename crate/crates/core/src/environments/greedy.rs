//! Gaussian-noise environment calibrated so that a fixed linear policy is the
//! per-round revenue maximizer.
//!
//! With `y = u + N`, `N ~ N(0, sigma^2)`, the revenue-maximizing price is the
//! greedy price `J(u) = argmax_v v (1 - Phi((v - u) / sigma))`. Setting
//! `u_t = J^{-1}(x_t . beta*)` makes `x_t . beta*` optimal in every round.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::noise::{std_normal_pdf, std_normal_sf, NoiseModel};
use super::{ContextSource, SaleEnvironment};
use crate::error::{PricingError, Result};
use crate::grid::{dot, norm2};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn revenue(v: f64, u: f64, sigma: f64) -> f64 {
    v * std_normal_sf((v - u) / sigma)
}

/// First-order condition of the greedy price, scaled by `1/pdf`: positive left of the optimum.
fn first_order(v: f64, u: f64, sigma: f64) -> f64 {
    let z = (v - u) / sigma;
    sigma * std_normal_sf(z) - v * std_normal_pdf(z)
}

/// Greedy price `J(u)`: the maximizer of `v (1 - Phi((v - u)/sigma))` over `v >= 0`.
///
/// Golden-section search localizes the maximum; the first-order condition is
/// then solved by bisection, since the revenue is too flat at its peak for the
/// search alone to pin the argument below about `1e-8`.
pub fn greedy_price_j(u: f64, sigma: f64) -> f64 {
    assert!(sigma > 0.0, "sigma must be positive");
    let (mut a, mut b) = (0.0, u.max(0.0) + 6.0 * sigma + 1.0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (revenue(c, u, sigma), revenue(d, u, sigma));
    while b - a > 1e-7 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = revenue(c, u, sigma);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = revenue(d, u, sigma);
        }
    }
    let mid = 0.5 * (a + b);
    let (mut lo, mut hi) = ((mid - 1e-4).max(0.0), mid + 1e-4);
    if first_order(lo, u, sigma) < 0.0 || first_order(hi, u, sigma) > 0.0 {
        lo = 0.0;
        hi = u.max(0.0) + 6.0 * sigma + 1.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if first_order(m, u, sigma) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// `u` with `J(u) = p`, allowing negative `u`.
fn inverse_j_unchecked(p: f64, sigma: f64) -> f64 {
    // at the optimum p, the standardized gap z = (p - u)/sigma solves
    // sf(z) = (p / sigma) pdf(z); the Mills ratio sf/pdf is decreasing
    let c = p / sigma;
    let k = |z: f64| std_normal_sf(z) - c * std_normal_pdf(z);
    let mut lo = -1.0;
    while k(lo) <= 0.0 {
        lo *= 2.0;
    }
    let mut hi = 1.0 / c + 1.0;
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if k(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    p - sigma * 0.5 * (lo + hi)
}

/// Inverse of the greedy price function, found by bisection on the optimality condition.
pub fn inverse_j(p: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(PricingError::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let floor = greedy_price_j(0.0, sigma);
    if !(p >= floor - 1e-12) {
        return Err(PricingError::Domain(format!("price {p} is below J(0) = {floor}")));
    }
    Ok(inverse_j_unchecked(p, sigma).max(0.0))
}

/// Gaussian valuations with `u_t = J^{-1}(x_t . beta*)`.
#[derive(Debug, Clone)]
pub struct GaussianGreedyEnv {
    pub beta_star: Vec<f64>,
    pub sigma: f64,
    pub bound: u32,
    contexts: ContextSource,
    rng: ChaCha8Rng,
    x: Vec<f64>,
    u: f64,
    y: f64,
}

impl GaussianGreedyEnv {
    /// Contexts are drawn uniformly from the nonnegative part of the radius-`B` sphere.
    pub fn new(beta_star: Vec<f64>, sigma: f64, bound: u32, seed: u64) -> Result<Self> {
        let dim = beta_star.len();
        Self::with_contexts(beta_star, sigma, bound, ContextSource::Sphere { dim, radius: bound as f64 }, seed)
    }

    pub fn with_contexts(
        beta_star: Vec<f64>,
        sigma: f64,
        bound: u32,
        contexts: ContextSource,
        seed: u64,
    ) -> Result<Self> {
        if beta_star.is_empty() || beta_star.iter().any(|&b| !(b >= 0.0)) || norm2(&beta_star) > 1.0 + 1e-12 {
            return Err(PricingError::invalid("beta* must be nonnegative with norm at most 1"));
        }
        if !(sigma > 0.0) {
            return Err(PricingError::invalid(format!("sigma must be positive, got {sigma}")));
        }
        if contexts.dim() != beta_star.len() {
            return Err(PricingError::invalid("context dimension differs from beta*"));
        }
        let floor = greedy_price_j(0.0, sigma);
        let min_price = contexts.min_inner_product(&beta_star);
        if min_price < floor {
            return Err(PricingError::invalid(format!(
                "some contexts give x . beta* = {min_price} below J(0) = {floor}"
            )));
        }
        let dim = beta_star.len();
        Ok(Self {
            beta_star,
            sigma,
            bound,
            contexts,
            rng: ChaCha8Rng::seed_from_u64(seed),
            x: vec![0.0; dim],
            u: 0.0,
            y: 0.0,
        })
    }

    /// Noiseless valuation of the current round.
    pub fn current_u(&self) -> f64 {
        self.u
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel::Gaussian { sigma: self.sigma }
    }
}

impl SaleEnvironment for GaussianGreedyEnv {
    fn dim(&self) -> usize {
        self.beta_star.len()
    }

    fn next_context(&mut self, t: usize) -> Vec<f64> {
        self.x = self.contexts.draw(t, &mut self.rng);
        self.u = inverse_j_unchecked(dot(&self.x, &self.beta_star), self.sigma);
        self.y = self.u + self.noise().sample(&mut self.rng);
        self.x.clone()
    }

    fn post_price(&mut self, _t: usize, price: f64) -> bool {
        price <= self.y
    }

    fn realized_valuation(&self) -> Option<f64> {
        Some(self.y)
    }

    fn sale_probability(&self, price: f64) -> f64 {
        std_normal_sf((price - self.u) / self.sigma)
    }

    fn optimal_price(&self, _vmax: f64) -> (f64, f64) {
        let p = dot(&self.x, &self.beta_star);
        (p, revenue(p, self.u, self.sigma))
    }

    fn comparator_price(&self) -> Option<f64> {
        Some(dot(&self.x, &self.beta_star))
    }
}
