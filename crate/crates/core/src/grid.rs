//! Rounding primitives, revenue functions and the shared discretization context.
//!
//! Every discretized quantity in the crate lives on a grid `{i * step : i in Z}`.
//! Grid membership is decided on the integer index, never on the real value, so
//! that accumulated floating point error cannot move a price across a grid line.

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};

/// Relative tolerance used to snap `x / step` onto an integer.
pub const SNAP_TOLERANCE: f64 = 1e-12;

/// The discretization context shared by every construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Parameter-grid step.
    pub delta: f64,
    /// Price and CDF grid step.
    pub gamma: f64,
    /// Feature-norm bound `B`.
    pub bound: u32,
    /// Feature dimension `d`.
    pub dim: usize,
    /// Horizon `T`.
    pub horizon: usize,
}

impl GridSpec {
    pub fn new(delta: f64, gamma: f64, bound: u32, dim: usize, horizon: usize) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(PricingError::invalid(format!("delta must lie in (0, 1], got {delta}")));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(PricingError::invalid(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        if bound == 0 || dim == 0 || horizon == 0 {
            return Err(PricingError::invalid("B, d and T must all be positive"));
        }
        Ok(Self { delta, gamma, bound, dim, horizon })
    }

    /// Linear-policy setting: `delta = T^{-1/3} d^{-1/6}`, `gamma = T^{-1/3} d^{1/3}`,
    /// with `gamma` snapped to the form `1/n` afterwards.
    pub fn linear_policy_auto(horizon: usize, dim: usize, bound: u32) -> Result<Self> {
        let (t, d) = (horizon as f64, dim as f64);
        let delta = t.powf(-1.0 / 3.0) * d.powf(-1.0 / 6.0);
        let gamma = t.powf(-1.0 / 3.0) * d.powf(1.0 / 3.0);
        Self::new(delta.min(1.0), snap_gamma(gamma.min(1.0))?, bound, dim, horizon)
    }

    /// Noisy-valuation setting: `delta = T^{-1/4} d^{-1/2}`, `gamma = T^{-1/4}`,
    /// with `gamma` snapped to the form `1/n` afterwards.
    pub fn noisy_valuation_auto(horizon: usize, dim: usize, bound: u32) -> Result<Self> {
        let (t, d) = (horizon as f64, dim as f64);
        let delta = t.powf(-0.25) * d.powf(-0.5);
        let gamma = t.powf(-0.25);
        Self::new(delta.min(1.0), snap_gamma(gamma.min(1.0))?, bound, dim, horizon)
    }

    /// Number of price steps per unit, `1/gamma`, when it is integral.
    pub fn steps_per_unit(&self) -> Option<u32> {
        steps_per_unit(self.gamma)
    }

    /// `delta * sqrt(d) <= gamma`, required for the noisy-valuation policy class.
    pub fn satisfies_lv_coupling(&self) -> bool {
        self.delta * (self.dim as f64).sqrt() <= self.gamma * (1.0 + SNAP_TOLERANCE)
    }
}

/// Largest `1/n` that does not exceed `gamma`.
pub fn snap_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(PricingError::invalid(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    let inv = 1.0 / gamma;
    let n = if (inv - inv.round()).abs() <= SNAP_TOLERANCE * inv {
        inv.round()
    } else {
        inv.ceil()
    };
    Ok(1.0 / n)
}

/// `1/gamma` as an integer, if it is one (up to the snap tolerance).
pub fn steps_per_unit(gamma: f64) -> Option<u32> {
    if !(gamma > 0.0) {
        return None;
    }
    let inv = 1.0 / gamma;
    let n = inv.round();
    if n >= 1.0 && (inv - n).abs() <= SNAP_TOLERANCE * inv.max(1.0) && n <= u32::MAX as f64 {
        Some(n as u32)
    } else {
        None
    }
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(PricingError::invalid(format!("rounding step must be positive, got {step}")))
    }
}

/// Integer nearest to `x / step` if `x` is within the snap tolerance of a grid point.
fn snapped_quotient(x: f64, step: f64) -> (f64, Option<f64>) {
    let q = x / step;
    let r = q.round_ties_even();
    if (q - r).abs() <= SNAP_TOLERANCE * q.abs().max(1.0) {
        (q, Some(r))
    } else {
        (q, None)
    }
}

/// Floor of an already-scaled quotient `q`, snapping `q` onto a nearby integer.
pub(crate) fn floor_snapped(q: f64) -> i64 {
    let r = q.round_ties_even();
    if (q - r).abs() <= SNAP_TOLERANCE * q.abs().max(1.0) {
        r as i64
    } else {
        q.floor() as i64
    }
}

/// Index `i` of the lower rounding `floor(x / step) * step`.
pub fn floor_index(x: f64, step: f64) -> Result<i64> {
    check_step(step)?;
    let (q, snap) = snapped_quotient(x, step);
    Ok(snap.unwrap_or_else(|| q.floor()) as i64)
}

/// Index `i` of the upper rounding `ceil(x / step) * step`.
pub fn ceil_index(x: f64, step: f64) -> Result<i64> {
    check_step(step)?;
    let (q, snap) = snapped_quotient(x, step);
    Ok(snap.unwrap_or_else(|| q.ceil()) as i64)
}

/// Lower rounding of `x` to a multiple of `step`.
pub fn floor_round(x: f64, step: f64) -> Result<f64> {
    Ok(floor_index(x, step)? as f64 * step)
}

/// Upper rounding of `x` to a multiple of `step`.
pub fn ceil_round(x: f64, step: f64) -> Result<f64> {
    Ok(ceil_index(x, step)? as f64 * step)
}

pub fn vector_floor_round(theta: &[f64], step: f64) -> Result<Vec<f64>> {
    theta.iter().map(|&x| floor_round(x, step)).collect()
}

pub fn vector_ceil_round(theta: &[f64], step: f64) -> Result<Vec<f64>> {
    theta.iter().map(|&x| ceil_round(x, step)).collect()
}

/// A grid value stored as an integer multiple of its step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridValue {
    pub index: i64,
    pub step: f64,
}

impl GridValue {
    pub fn floor_of(x: f64, step: f64) -> Result<Self> {
        Ok(Self { index: floor_index(x, step)?, step })
    }

    pub fn value(&self) -> f64 {
        self.index as f64 * self.step
    }
}

/// A cumulative distribution function that can be evaluated pointwise.
///
/// `cdf` is the right-continuous value `P[N <= v]`. `cdf_left` is the left limit
/// `P[N < v]`; it differs from `cdf` only at atoms.
pub trait Cdf {
    fn cdf(&self, v: f64) -> f64;

    fn cdf_left(&self, v: f64) -> f64 {
        self.cdf(v)
    }
}

impl<F: Fn(f64) -> f64> Cdf for F {
    fn cdf(&self, v: f64) -> f64 {
        self(v)
    }
}

/// Expected revenue `v * (1 - F(v - u))` of price `v` under noiseless valuation `u`.
pub fn revenue_g<C: Cdf + ?Sized>(v: f64, u: f64, noise: &C) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(PricingError::invalid(format!("price must be nonnegative, got {v}")));
    }
    Ok(v * (1.0 - noise.cdf(v - u)))
}

/// Expected revenue `v * accept_prob` of a price with known acceptance probability.
pub fn revenue_h(v: f64, accept_prob: f64) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(PricingError::invalid(format!("price must be nonnegative, got {v}")));
    }
    if !(0.0..=1.0).contains(&accept_prob) {
        return Err(PricingError::invalid(format!(
            "acceptance probability must lie in [0, 1], got {accept_prob}"
        )));
    }
    Ok(v * accept_prob)
}

/// Exact sale probability `P[u + N >= v]` at price `v`.
pub fn sale_probability<C: Cdf + ?Sized>(v: f64, u: f64, noise: &C) -> f64 {
    (1.0 - noise.cdf_left(v - u)).clamp(0.0, 1.0)
}

/// Exact expected revenue `v * P[u + N >= v]`; equals [`revenue_g`] away from atoms.
pub fn expected_revenue<C: Cdf + ?Sized>(v: f64, u: f64, noise: &C) -> f64 {
    v.max(0.0) * sale_probability(v, u, noise)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
