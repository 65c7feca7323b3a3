//! Price computation for single linear-policy and noisy-valuation policies.

use crate::error::{PricingError, Result};
use crate::grid::{dot, floor_index, GridSpec};
use crate::policy_space::cdf_set::DiscreteCdf;

fn check_nonnegative(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|&c| c >= 0.0) {
        Ok(())
    } else {
        Err(PricingError::invalid(format!("{name} must have nonnegative components")))
    }
}

/// Price index `floor(x . beta / gamma)` of a linear policy.
pub fn lp_price_index(beta: &[f64], x: &[f64], gamma: f64) -> Result<i64> {
    check_nonnegative("beta", beta)?;
    check_nonnegative("x", x)?;
    if beta.len() != x.len() {
        return Err(PricingError::invalid("beta and x differ in dimension"));
    }
    floor_index(dot(x, beta), gamma)
}

/// Price `floor_gamma(x . beta)` posted by the linear policy `beta`.
pub fn lp_policy_price(beta: &[f64], x: &[f64], gamma: f64) -> Result<f64> {
    Ok(lp_price_index(beta, x, gamma)? as f64 * gamma)
}

/// The optimal incremental price and the objective value it attains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Increment {
    pub w: f64,
    pub value: f64,
}

/// Candidate maximizers of `w -> (u + w)(1 - F(w))` on `[-1, 1]`, ascending.
///
/// On each grid segment `F` is linear, so the objective is a concave or linear
/// quadratic and its maximum sits at an endpoint or at the interior vertex.
pub(crate) fn increment_candidates(u: f64, cdf: &DiscreteCdf) -> Vec<f64> {
    let counts = cdf.counts();
    let n = cdf.steps() as f64;
    let mut out = Vec::with_capacity(2 * counts.len());
    for i in 0..counts.len() {
        let wi = cdf.grid_point(i);
        out.push(wi);
        if i + 1 == counts.len() {
            break;
        }
        let slope = counts[i + 1] as f64 - counts[i] as f64;
        if slope > 0.0 {
            let fi = counts[i] as f64 / n;
            let vertex = (1.0 - fi + slope * wi - slope * u) / (2.0 * slope);
            if vertex > wi && vertex < cdf.grid_point(i + 1) {
                out.push(vertex);
            }
        }
    }
    out
}

fn increment_objective(u: f64, w: f64, cdf: &DiscreteCdf) -> f64 {
    (u + w) * (1.0 - cdf.eval(w))
}

/// Ties within this absolute margin go to the smaller increment.
const TIE_MARGIN: f64 = 1e-14;

/// Global maximizer `w*` of `(u_hat + w)(1 - F(w))` over `w` in `[-1, 1]`,
/// the smallest one on ties.
pub fn lv_optimal_increment(u_hat: f64, cdf: &DiscreteCdf) -> Increment {
    let mut best = Increment { w: -1.0, value: f64::NEG_INFINITY };
    for w in increment_candidates(u_hat, cdf) {
        let value = increment_objective(u_hat, w, cdf);
        if value > best.value + TIE_MARGIN {
            best = Increment { w, value };
        }
    }
    best
}

/// Price index of the noisy-valuation policy given `u_hat = x . theta_hat` and `w*`:
/// `max(floor(u_hat) - (B + 1) + floor(w*), 0)` in units of `gamma`.
pub fn lv_price_index(u_hat: f64, w_star: f64, bound: u32, gamma: f64) -> Result<i64> {
    let base = floor_index(u_hat, gamma)?;
    let inc = floor_index(w_star, gamma)?;
    Ok((base - (bound as i64 + 1) + inc).max(0))
}

/// Price posted by the policy built on `(theta_hat, F)` for context `x`:
/// the greedy price under the policy's own model, rounded down to the grid and
/// marked down by `(B + 1) * gamma`, clamped at 0.
pub fn lv_policy_price(theta_hat: &[f64], cdf: &DiscreteCdf, x: &[f64], spec: &GridSpec) -> Result<f64> {
    check_nonnegative("theta_hat", theta_hat)?;
    check_nonnegative("x", x)?;
    let u_hat = dot(x, theta_hat);
    let inc = lv_optimal_increment(u_hat, cdf);
    Ok(lv_price_index(u_hat, inc.w, spec.bound, spec.gamma)? as f64 * spec.gamma)
}
