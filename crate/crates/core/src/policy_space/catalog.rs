use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::grid::{dot, floor_index, norm2, GridSpec};
use crate::policy_space::cdf_set::{cdf_family_size, enumerate_cdf_set_capped, DiscreteCdf};
use crate::policy_space::parameter_grid::{enumerate_parameter_grid_capped, ParameterGrid, DEFAULT_GRID_CAP};
use crate::policy_space::policy::{lv_optimal_increment, lv_price_index};

/// Catalogs at least this large compute advice in parallel.
const PARALLEL_ADVICE_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    /// Linear policies `floor_gamma(x . beta)`.
    LinearPolicy,
    /// Greedy policies over a `(theta_hat, F_hat)` model with a markdown.
    NoisyValuation,
}

/// A policy descriptor: indices into the parameter grid and CDF family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyDescriptor {
    Linear { theta: usize },
    NoisyValuation { theta: usize, cdf: usize },
}

/// An enumerated set of deterministic context-to-price policies.
///
/// Entries are index pairs; advice is computed on demand per context.
#[derive(Debug, Clone)]
pub struct PolicyCatalog {
    pub kind: PolicyKind,
    pub spec: GridSpec,
    pub grid: ParameterGrid,
    pub cdfs: Vec<DiscreteCdf>,
    thetas: Vec<Vec<f64>>,
    max_action: i64,
}

/// Size the catalog would have, computed without enumerating it.
pub fn catalog_size(kind: PolicyKind, spec: &GridSpec) -> Result<f64> {
    let grid = enumerate_parameter_grid_capped(spec.delta, spec.dim, DEFAULT_GRID_CAP)?;
    Ok(match kind {
        PolicyKind::LinearPolicy => grid.len() as f64,
        PolicyKind::NoisyValuation => {
            let n = spec.steps_per_unit().ok_or_else(|| {
                PricingError::invalid(format!("1/gamma must be an integer, got gamma = {}", spec.gamma))
            })?;
            grid.len() as f64 * cdf_family_size(n).map(|s| s as f64).unwrap_or(f64::INFINITY)
        }
    })
}

pub fn build_catalog(kind: PolicyKind, spec: &GridSpec) -> Result<PolicyCatalog> {
    build_catalog_capped(kind, spec, DEFAULT_GRID_CAP)
}

/// Builds the policy catalog, refusing if it would hold more than `cap` policies.
pub fn build_catalog_capped(kind: PolicyKind, spec: &GridSpec, cap: usize) -> Result<PolicyCatalog> {
    let grid = enumerate_parameter_grid_capped(spec.delta, spec.dim, cap.min(DEFAULT_GRID_CAP).max(1))
        .map_err(|e| match e {
            PricingError::Capacity { size, .. } => PricingError::Capacity {
                what: format!("{kind:?} catalog (delta = {}, d = {})", spec.delta, spec.dim),
                size,
                cap: cap as f64,
            },
            other => other,
        })?;
    let (cdfs, max_action) = match kind {
        PolicyKind::LinearPolicy => (Vec::new(), floor_index(spec.bound as f64, spec.gamma)?),
        PolicyKind::NoisyValuation => {
            let n = spec.steps_per_unit().ok_or_else(|| {
                PricingError::invalid(format!("1/gamma must be an integer, got gamma = {}", spec.gamma))
            })?;
            let family = cdf_family_size(n).map(|s| s as f64).unwrap_or(f64::INFINITY);
            let total = grid.len() as f64 * family;
            if total > cap as f64 {
                return Err(PricingError::Capacity {
                    what: format!(
                        "NoisyValuation catalog (|grid| = {}, |CDF family| = {family}, gamma = 1/{n})",
                        grid.len()
                    ),
                    size: total,
                    cap: cap as f64,
                });
            }
            let cdfs = enumerate_cdf_set_capped(spec.gamma, cap)?;
            (cdfs, floor_index(spec.bound as f64 + 1.0, spec.gamma)?)
        }
    };
    let thetas = grid.vectors();
    Ok(PolicyCatalog { kind, spec: *spec, grid, cdfs, thetas, max_action })
}

impl PolicyCatalog {
    pub fn len(&self) -> usize {
        match self.kind {
            PolicyKind::LinearPolicy => self.grid.len(),
            PolicyKind::NoisyValuation => self.grid.len() * self.cdfs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of prices `0, gamma, ..., max_action * gamma`.
    pub fn num_actions(&self) -> usize {
        self.max_action as usize + 1
    }

    pub fn action_price(&self, action: usize) -> f64 {
        action as f64 * self.spec.gamma
    }

    pub fn action_grid(&self) -> Vec<f64> {
        (0..self.num_actions()).map(|a| self.action_price(a)).collect()
    }

    pub fn descriptor(&self, policy: usize) -> PolicyDescriptor {
        match self.kind {
            PolicyKind::LinearPolicy => PolicyDescriptor::Linear { theta: policy },
            PolicyKind::NoisyValuation => PolicyDescriptor::NoisyValuation {
                theta: policy / self.cdfs.len(),
                cdf: policy % self.cdfs.len(),
            },
        }
    }

    /// Inverse of [`PolicyCatalog::descriptor`].
    pub fn policy_index(&self, descriptor: PolicyDescriptor) -> usize {
        match descriptor {
            PolicyDescriptor::Linear { theta } => theta,
            PolicyDescriptor::NoisyValuation { theta, cdf } => theta * self.cdfs.len() + cdf,
        }
    }

    pub fn theta(&self, i: usize) -> &[f64] {
        &self.thetas[i]
    }

    fn check_context(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.dim {
            return Err(PricingError::invalid(format!(
                "context has dimension {}, expected {}",
                x.len(),
                self.spec.dim
            )));
        }
        if x.iter().any(|&c| !(c >= 0.0)) {
            return Err(PricingError::invalid("context must have nonnegative components"));
        }
        if norm2(x) > self.spec.bound as f64 * (1.0 + 1e-9) {
            return Err(PricingError::invalid(format!("context norm exceeds B = {}", self.spec.bound)));
        }
        Ok(())
    }

    /// Action recommended by a single policy.
    pub fn policy_action(&self, policy: usize, x: &[f64]) -> Result<usize> {
        self.check_context(x)?;
        Ok(match self.descriptor(policy) {
            PolicyDescriptor::Linear { theta } => self.lp_action(dot(x, &self.thetas[theta])),
            PolicyDescriptor::NoisyValuation { theta, cdf } => {
                self.lv_action(dot(x, &self.thetas[theta]), &self.cdfs[cdf])
            }
        })
    }

    fn lp_action(&self, u: f64) -> usize {
        let idx = floor_index(u, self.spec.gamma).unwrap_or(0);
        idx.clamp(0, self.max_action) as usize
    }

    fn lv_action(&self, u_hat: f64, cdf: &DiscreteCdf) -> usize {
        let inc = lv_optimal_increment(u_hat, cdf);
        let idx = lv_price_index(u_hat, inc.w, self.spec.bound, self.spec.gamma).unwrap_or(0);
        idx.clamp(0, self.max_action) as usize
    }

    /// Writes every policy's recommended action for context `x` into `out`.
    pub fn advice(&self, x: &[f64], out: &mut Vec<usize>) -> Result<()> {
        self.check_context(x)?;
        out.clear();
        out.resize(self.len(), 0);
        match self.kind {
            PolicyKind::LinearPolicy => {
                if out.len() >= PARALLEL_ADVICE_THRESHOLD {
                    out.par_iter_mut()
                        .zip(self.thetas.par_iter())
                        .for_each(|(slot, theta)| *slot = self.lp_action(dot(x, theta)));
                } else {
                    for (slot, theta) in out.iter_mut().zip(&self.thetas) {
                        *slot = self.lp_action(dot(x, theta));
                    }
                }
            }
            PolicyKind::NoisyValuation => {
                let per_theta = self.cdfs.len();
                let fill = |(chunk, theta): (&mut [usize], &Vec<f64>)| {
                    let u_hat = dot(x, theta);
                    for (slot, cdf) in chunk.iter_mut().zip(&self.cdfs) {
                        *slot = self.lv_action(u_hat, cdf);
                    }
                };
                if out.len() >= PARALLEL_ADVICE_THRESHOLD {
                    out.par_chunks_mut(per_theta).zip(self.thetas.par_iter()).for_each(fill);
                } else {
                    out.chunks_mut(per_theta).zip(self.thetas.iter()).for_each(fill);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy_space::policy::{lp_policy_price, lv_policy_price};

    fn spec(delta: f64, gamma: f64, dim: usize) -> GridSpec {
        GridSpec::new(delta, gamma, 1, dim, 100).unwrap()
    }

    #[test]
    fn catalog_sizes() {
        assert_eq!(build_catalog(PolicyKind::LinearPolicy, &spec(0.5, 0.5, 2)).unwrap().len(), 6);
        assert_eq!(build_catalog(PolicyKind::NoisyValuation, &spec(0.5, 0.5, 1)).unwrap().len(), 45);
        assert_eq!(build_catalog(PolicyKind::NoisyValuation, &spec(1.0, 1.0, 1)).unwrap().len(), 6);
        assert_eq!(build_catalog(PolicyKind::NoisyValuation, &spec(0.25, 0.5, 1)).unwrap().len(), 75);
        assert_eq!(catalog_size(PolicyKind::NoisyValuation, &spec(0.25, 0.5, 1)).unwrap(), 75.0);
    }

    #[test]
    fn action_grids() {
        let lp = build_catalog(PolicyKind::LinearPolicy, &spec(0.5, 0.25, 2)).unwrap();
        assert_eq!(lp.action_grid(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let lv = build_catalog(PolicyKind::NoisyValuation, &spec(0.5, 0.5, 1)).unwrap();
        assert_eq!(lv.action_grid(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn capacity_reports_would_be_size() {
        let err = build_catalog_capped(PolicyKind::NoisyValuation, &spec(0.1, 0.1, 1), 1_000_000).unwrap_err();
        match err {
            PricingError::Capacity { size, .. } => {
                // 11 parameters times C(30, 10)
                assert_eq!(size, 11.0 * 30_045_015.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn advice_matches_single_policy_prices() {
        let s = spec(0.25, 0.5, 2);
        let lp = build_catalog(PolicyKind::LinearPolicy, &s).unwrap();
        let lv = build_catalog(PolicyKind::NoisyValuation, &s).unwrap();
        let x = [0.6, 0.7];
        let mut advice = Vec::new();
        lp.advice(&x, &mut advice).unwrap();
        for (i, &a) in advice.iter().enumerate() {
            let price = lp_policy_price(lp.theta(i), &x, s.gamma).unwrap();
            assert_eq!(lp.action_price(a), price);
            assert!(a < lp.num_actions());
        }
        lv.advice(&x, &mut advice).unwrap();
        for (i, &a) in advice.iter().enumerate() {
            let PolicyDescriptor::NoisyValuation { theta, cdf } = lv.descriptor(i) else { unreachable!() };
            let price = lv_policy_price(lv.theta(theta), &lv.cdfs[cdf], &x, &s).unwrap();
            assert_eq!(lv.action_price(a), price);
            assert!(a < lv.num_actions());
            assert_eq!(lv.policy_index(lv.descriptor(i)), i);
        }
    }

    #[test]
    fn parallel_advice_agrees_with_serial() {
        let s = spec(0.25, 1.0 / 3.0, 3);
        let lv = build_catalog(PolicyKind::NoisyValuation, &s).unwrap();
        assert!(lv.len() >= PARALLEL_ADVICE_THRESHOLD);
        let x = [0.3, 0.5, 0.2];
        let mut advice = Vec::new();
        lv.advice(&x, &mut advice).unwrap();
        for (i, &a) in advice.iter().enumerate().step_by(97) {
            assert_eq!(lv.policy_action(i, &x).unwrap(), a);
        }
    }

    #[test]
    fn rejects_inadmissible_contexts() {
        let lp = build_catalog(PolicyKind::LinearPolicy, &spec(0.5, 0.5, 2)).unwrap();
        let mut advice = Vec::new();
        assert!(lp.advice(&[1.0, 1.0], &mut advice).is_err());
        assert!(lp.advice(&[-0.1, 0.0], &mut advice).is_err());
        assert!(lp.advice(&[0.1], &mut advice).is_err());
    }
}
