use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::grid::{floor_snapped, SNAP_TOLERANCE};

/// Default cap on the number of enumerated parameter vectors.
pub const DEFAULT_GRID_CAP: usize = 10_000_000;

/// The discretized parameter set: nonnegative vectors with components on a
/// `delta`-grid inside the closed unit ball.
///
/// Vectors are stored by their integer coordinates `n_i` (component `n_i * delta`)
/// in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    pub delta: f64,
    pub dim: usize,
    coords: Vec<Vec<u32>>,
}

impl ParameterGrid {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Integer coordinates of the `i`-th vector.
    pub fn coords(&self, i: usize) -> &[u32] {
        &self.coords[i]
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.coords[i].iter().map(|&n| n as f64 * self.delta).collect()
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.vector(i)).collect()
    }

    /// Position of the vector with integer coordinates `coords`, if it is a member.
    pub fn index_of(&self, coords: &[u32]) -> Option<usize> {
        self.coords.binary_search_by(|c| c.as_slice().cmp(coords)).ok()
    }

    /// Largest admissible coordinate, `floor(1/delta)`.
    pub fn max_coord(&self) -> u32 {
        max_coord(self.delta)
    }
}

fn max_coord(delta: f64) -> u32 {
    floor_snapped(1.0 / delta).max(0) as u32
}

fn inside_ball(sq_norm_units: u64, delta: f64) -> bool {
    (sq_norm_units as f64) * delta * delta <= 1.0 + SNAP_TOLERANCE
}

pub fn enumerate_parameter_grid(delta: f64, dim: usize) -> Result<ParameterGrid> {
    enumerate_parameter_grid_capped(delta, dim, DEFAULT_GRID_CAP)
}

/// Enumerates the parameter set, refusing once more than `cap` vectors are found.
pub fn enumerate_parameter_grid_capped(delta: f64, dim: usize, cap: usize) -> Result<ParameterGrid> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(PricingError::invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    if dim == 0 {
        return Err(PricingError::invalid("dimension must be at least 1"));
    }
    let m = max_coord(delta);
    let mut coords = Vec::new();
    let mut prefix = Vec::with_capacity(dim);
    let complete = fill(&mut prefix, 0, dim, m, delta, cap, &mut coords);
    if !complete {
        return Err(PricingError::Capacity {
            what: format!("parameter grid (delta = {delta}, d = {dim})"),
            size: estimate_grid_size(delta, dim),
            cap: cap as f64,
        });
    }
    Ok(ParameterGrid { delta, dim, coords })
}

// depth-first in lexicographic order, pruning prefixes that already leave the ball
fn fill(
    prefix: &mut Vec<u32>,
    sq: u64,
    dim: usize,
    m: u32,
    delta: f64,
    cap: usize,
    out: &mut Vec<Vec<u32>>,
) -> bool {
    if prefix.len() == dim {
        if out.len() >= cap {
            return false;
        }
        out.push(prefix.clone());
        return true;
    }
    for n in 0..=m {
        let next = sq + (n as u64) * (n as u64);
        if !inside_ball(next, delta) {
            break;
        }
        prefix.push(n);
        let ok = fill(prefix, next, dim, m, delta, cap, out);
        prefix.pop();
        if !ok {
            return false;
        }
    }
    true
}

/// Volume-based estimate of the grid size: the positive orthant of the unit
/// ball measured in `delta`-cells, or the full box bound if that is smaller.
pub fn estimate_grid_size(delta: f64, dim: usize) -> f64 {
    let d = dim as f64;
    let box_bound = (max_coord(delta) as f64 + 1.0).powf(d);
    let ln_ball = (d / 2.0) * std::f64::consts::PI.ln() - statrs::function::gamma::ln_gamma(d / 2.0 + 1.0);
    let orthant = (ln_ball - d * 2f64.ln() - d * delta.ln()).exp();
    box_bound.min(orthant.max(1.0))
}
