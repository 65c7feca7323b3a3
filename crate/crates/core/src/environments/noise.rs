use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{PricingError, Result};
use crate::grid::{expected_revenue, Cdf};
use crate::policy_space::policy::increment_candidates;
use crate::policy_space::DiscreteCdf;

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail `1 - Phi(z)`, accurate for large `z`.
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Additive valuation noise `N` in `y = u + N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// Uniform on `[-1, 1]`.
    Uniform,
    /// `N(0, sigma^2)`, unbounded.
    Gaussian { sigma: f64 },
    /// `N(0, sigma^2)` clipped to `[-1, 1]`, leaving atoms at both edges.
    ClippedGaussian { sigma: f64 },
    /// A member of the discrete CDF family, sampled by inversion.
    Discrete(DiscreteCdf),
    /// Deterministic noise `N = at`.
    PointMass { at: f64 },
}

impl NoiseModel {
    /// Whether the noise is supported on `[-1, 1]`.
    pub fn is_bounded(&self) -> bool {
        match self {
            NoiseModel::Gaussian { .. } => false,
            NoiseModel::PointMass { at } => (-1.0..=1.0).contains(at),
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::Gaussian { sigma } | NoiseModel::ClippedGaussian { sigma } if !(*sigma > 0.0) => {
                Err(PricingError::invalid(format!("noise sigma must be positive, got {sigma}")))
            }
            NoiseModel::PointMass { at } if !at.is_finite() => Err(PricingError::invalid("point mass must be finite")),
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseModel::Uniform => rng.random_range(-1.0..=1.0),
            NoiseModel::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
            NoiseModel::ClippedGaussian { sigma } => (sigma * rng.sample::<f64, _>(StandardNormal)).clamp(-1.0, 1.0),
            NoiseModel::Discrete(f) => f.quantile(rng.random::<f64>()),
            NoiseModel::PointMass { at } => *at,
        }
    }

    /// Price maximizing `v * P[u + N >= v]` over `[0, vmax]`, with its value.
    pub fn optimal_price(&self, u: f64, vmax: f64) -> (f64, f64) {
        match self {
            NoiseModel::Uniform => best_of(self, u, vmax, &[0.0, u - 1.0, (1.0 + u) / 2.0, vmax]),
            NoiseModel::PointMass { at } => best_of(self, u, vmax, &[0.0, u + at, vmax]),
            NoiseModel::Discrete(f) => optimal_price_discrete(u, f, vmax),
            NoiseModel::Gaussian { sigma } => {
                let v = super::greedy::greedy_price_j(u, *sigma).min(vmax);
                (v, expected_revenue(v, u, self))
            }
            NoiseModel::ClippedGaussian { .. } => optimal_price_dense(u, self, vmax),
        }
    }
}

impl Cdf for NoiseModel {
    fn cdf(&self, v: f64) -> f64 {
        match self {
            NoiseModel::Uniform => ((v + 1.0) / 2.0).clamp(0.0, 1.0),
            NoiseModel::Gaussian { sigma } => std_normal_cdf(v / sigma),
            NoiseModel::ClippedGaussian { sigma } => {
                if v < -1.0 {
                    0.0
                } else if v >= 1.0 {
                    1.0
                } else {
                    std_normal_cdf(v / sigma)
                }
            }
            NoiseModel::Discrete(f) => f.eval(v),
            NoiseModel::PointMass { at } => {
                if v >= *at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn cdf_left(&self, v: f64) -> f64 {
        match self {
            NoiseModel::ClippedGaussian { sigma } => {
                if v <= -1.0 {
                    0.0
                } else if v > 1.0 {
                    1.0
                } else {
                    std_normal_cdf(v / sigma)
                }
            }
            NoiseModel::Discrete(f) => f.cdf_left(v),
            NoiseModel::PointMass { at } => {
                if v > *at {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.cdf(v),
        }
    }
}

fn best_of<C: Cdf + ?Sized>(noise: &C, u: f64, vmax: f64, candidates: &[f64]) -> (f64, f64) {
    let mut prices: Vec<f64> = candidates.iter().map(|c| c.clamp(0.0, vmax)).collect();
    prices.sort_by(f64::total_cmp);
    let mut best = (0.0, 0.0);
    for v in prices {
        let value = expected_revenue(v, u, noise);
        if value > best.1 + 1e-15 {
            best = (v, value);
        }
    }
    best
}

/// Per-segment closed form for a discrete-family noise CDF.
pub fn optimal_price_discrete(u: f64, cdf: &DiscreteCdf, vmax: f64) -> (f64, f64) {
    let mut candidates: Vec<f64> = increment_candidates(u, cdf).into_iter().map(|w| u + w).collect();
    candidates.push(0.0);
    candidates.push(vmax);
    best_of(cdf, u, vmax, &candidates)
}

/// Dense grid with step `1e-5` over `[0, vmax]`, refined on a `1e-8` grid around the best cell.
pub fn optimal_price_dense<C: Cdf + ?Sized>(u: f64, noise: &C, vmax: f64) -> (f64, f64) {
    let step = 1e-5;
    let m = (vmax / step).ceil() as usize;
    let mut best = (0.0, 0.0);
    let mut best_k = 0;
    for k in 0..=m {
        let v = (k as f64 * step).min(vmax);
        let value = expected_revenue(v, u, noise);
        if value > best.1 {
            best = (v, value);
            best_k = k;
        }
    }
    let lo = (best_k.saturating_sub(1)) as f64 * step;
    let fine = 1e-8;
    for k in 0..=((2.0 * step / fine) as usize) {
        let v = (lo + k as f64 * fine).min(vmax);
        let value = expected_revenue(v, u, noise);
        if value > best.1 {
            best = (v, value);
        }
    }
    best
}
