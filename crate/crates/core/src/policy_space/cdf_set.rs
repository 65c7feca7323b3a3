//! Piecewise-linear CDFs on `[-1, 1]` whose breakpoints and values are both
//! multiples of the step `gamma = 1/n`.

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::grid::{floor_snapped, steps_per_unit, Cdf};

/// Default cap on the size of an enumerated CDF family.
pub const DEFAULT_CDF_CAP: usize = 10_000_000;

/// A member of the discrete CDF family.
///
/// `counts[i]` is the CDF value at `v = -1 + i/n` in units of `1/n`, for
/// `i = 0..=2n`. The last count is always `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteCdf {
    steps: u32,
    counts: Vec<u32>,
}

impl DiscreteCdf {
    /// Builds a CDF from its grid counts, checking every family invariant.
    pub fn from_counts(steps: u32, counts: Vec<u32>) -> Result<Self> {
        if steps == 0 {
            return Err(PricingError::invalid("the CDF grid needs at least one step per unit"));
        }
        let len = 2 * steps as usize + 1;
        if counts.len() != len {
            return Err(PricingError::invalid(format!(
                "expected {len} grid values, got {}",
                counts.len()
            )));
        }
        if counts.windows(2).any(|w| w[1] < w[0]) {
            return Err(PricingError::invalid("CDF values must be nondecreasing"));
        }
        if counts[len - 1] != steps {
            return Err(PricingError::invalid("CDF must reach 1 at v = 1"));
        }
        Ok(Self { steps, counts })
    }

    /// Builds a CDF from real grid values, each of which must be a multiple of `gamma`.
    pub fn from_values(gamma: f64, values: &[f64]) -> Result<Self> {
        let n = steps_per_unit(gamma)
            .ok_or_else(|| PricingError::invalid(format!("1/gamma must be an integer, got gamma = {gamma}")))?;
        let mut counts = Vec::with_capacity(values.len());
        for &v in values {
            let q = v * n as f64;
            let c = q.round();
            if (q - c).abs() > 1e-9 || c < 0.0 {
                return Err(PricingError::invalid(format!("value {v} is not a nonnegative multiple of {gamma}")));
            }
            counts.push(c as u32);
        }
        Self::from_counts(n, counts)
    }

    /// `n = 1/gamma`.
    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn gamma(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Grid abscissae `-1, -1 + gamma, ..., 1`.
    pub fn grid_points(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|i| self.grid_point(i)).collect()
    }

    pub fn grid_point(&self, i: usize) -> f64 {
        (i as f64 - self.steps as f64) / self.steps as f64
    }

    /// CDF values at the grid points.
    pub fn values(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.steps as f64).collect()
    }

    pub fn value_at(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.steps as f64
    }

    /// Evaluates the CDF: 0 left of -1, 1 right of 1, linear between grid points.
    pub fn eval(&self, v: f64) -> f64 {
        if v.is_nan() {
            return f64::NAN;
        }
        if v < -1.0 {
            return 0.0;
        }
        if v > 1.0 {
            return 1.0;
        }
        let n = self.steps as f64;
        let pos = (v + 1.0) * n;
        let i = floor_snapped(pos).clamp(0, 2 * self.steps as i64) as usize;
        if i + 1 >= self.counts.len() {
            return 1.0;
        }
        let frac = (pos - i as f64).clamp(0.0, 1.0);
        let lo = self.counts[i] as f64;
        let hi = self.counts[i + 1] as f64;
        (lo + (hi - lo) * frac) / n
    }

    /// Mass of the atom at `-1`.
    pub fn atom_at_left_edge(&self) -> f64 {
        self.value_at(0)
    }

    /// Smallest `v` with `F(v) >= p`, for sampling by inversion.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.steps as f64;
        let target = p.clamp(0.0, 1.0) * n;
        if target <= self.counts[0] as f64 {
            return -1.0;
        }
        for i in 0..self.counts.len() - 1 {
            let (lo, hi) = (self.counts[i] as f64, self.counts[i + 1] as f64);
            if hi >= target && hi > lo {
                let frac = ((target - lo) / (hi - lo)).clamp(0.0, 1.0);
                return self.grid_point(i) + frac / n;
            }
        }
        1.0
    }
}

impl Cdf for DiscreteCdf {
    fn cdf(&self, v: f64) -> f64 {
        self.eval(v)
    }

    fn cdf_left(&self, v: f64) -> f64 {
        // the only possible atom sits at -1
        if v <= -1.0 {
            0.0
        } else {
            self.eval(v)
        }
    }
}

/// Evaluates `F` at `v`; see [`DiscreteCdf::eval`].
pub fn cdf_eval(cdf: &DiscreteCdf, v: f64) -> f64 {
    cdf.eval(v)
}

/// `C(3n, n)`, the size of the family for `gamma = 1/n`; `None` on overflow.
pub fn cdf_family_size(steps: u32) -> Option<u128> {
    binomial(3 * steps as u64, steps as u64)
}

fn binomial(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

pub fn enumerate_cdf_set(gamma: f64) -> Result<Vec<DiscreteCdf>> {
    enumerate_cdf_set_capped(gamma, DEFAULT_CDF_CAP)
}

/// Enumerates every member of the family for step `gamma`.
pub fn enumerate_cdf_set_capped(gamma: f64, cap: usize) -> Result<Vec<DiscreteCdf>> {
    let n = steps_per_unit(gamma)
        .ok_or_else(|| PricingError::invalid(format!("1/gamma must be a positive integer, got gamma = {gamma}")))?;
    let size = cdf_family_size(n);
    match size {
        Some(s) if s <= cap as u128 => {}
        _ => {
            return Err(PricingError::Capacity {
                what: format!("CDF family (gamma = 1/{n})"),
                size: size.map(|s| s as f64).unwrap_or(f64::INFINITY),
                cap: cap as f64,
            })
        }
    }
    let len = 2 * n as usize + 1;
    let mut out = Vec::with_capacity(size.unwrap_or(0) as usize);
    let mut counts = vec![0u32; len];
    counts[len - 1] = n;
    extend(&mut counts, 0, 0, n, &mut out);
    Ok(out)
}

// free positions are 0..len-1; each takes a value in [floor, n]
fn extend(counts: &mut Vec<u32>, pos: usize, floor: u32, n: u32, out: &mut Vec<DiscreteCdf>) {
    if pos == counts.len() - 1 {
        out.push(DiscreteCdf { steps: n, counts: counts.clone() });
        return;
    }
    for c in floor..=n {
        counts[pos] = c;
        extend(counts, pos + 1, c, n, out);
    }
}

/// Rounds an arbitrary CDF down onto the grid: the value at each grid point is
/// `floor_gamma(F(i * gamma))`, with the value at `v = 1` forced to 1.
pub fn discretize_cdf<C: Cdf + ?Sized>(cdf: &C, gamma: f64) -> Result<DiscreteCdf> {
    let n = steps_per_unit(gamma)
        .ok_or_else(|| PricingError::invalid(format!("1/gamma must be a positive integer, got gamma = {gamma}")))?;
    let len = 2 * n as usize + 1;
    let mut counts = Vec::with_capacity(len);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..len {
        let v = (i as f64 - n as f64) / n as f64;
        let f = cdf.cdf(v);
        if !(-1e-12..=1.0 + 1e-12).contains(&f) {
            return Err(PricingError::invalid(format!("CDF value {f} at {v} is outside [0, 1]")));
        }
        if f < prev - 1e-12 {
            return Err(PricingError::invalid(format!("CDF decreases at grid point {v}")));
        }
        prev = f;
        let c = floor_snapped(f * n as f64).clamp(0, n as i64) as u32;
        counts.push(c);
    }
    counts[len - 1] = n;
    DiscreteCdf::from_counts(n, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn uniform(v: f64) -> f64 {
        ((v + 1.0) / 2.0).clamp(0.0, 1.0)
    }

    fn point_mass_at_zero(v: f64) -> f64 {
        if v >= 0.0 {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn family_counts_match_balls_into_bins() {
        assert_eq!(enumerate_cdf_set(1.0).unwrap().len(), 3);
        assert_eq!(enumerate_cdf_set(0.5).unwrap().len(), 15);
        assert_eq!(enumerate_cdf_set(1.0 / 3.0).unwrap().len(), 84);
        // C(9, 3) by Pascal's rule
        let mut pascal = vec![vec![1u64; 1]];
        for row in 1..=9 {
            let prev = &pascal[row - 1];
            let mut next = vec![1u64; row + 1];
            for j in 1..row {
                next[j] = prev[j - 1] + prev[j];
            }
            pascal.push(next);
        }
        assert_eq!(pascal[9][3], 84);
        assert_eq!(cdf_family_size(3), Some(84));
        assert_eq!(cdf_family_size(4), Some(495));
    }

    #[test]
    fn unit_step_family_is_three_atoms() {
        let set = enumerate_cdf_set(1.0).unwrap();
        let counts: Vec<_> = set.iter().map(|f| f.counts().to_vec()).collect();
        assert_eq!(counts, vec![vec![0, 0, 1], vec![0, 1, 1], vec![1, 1, 1]]);
    }

    #[test]
    fn enumeration_has_no_duplicates_and_all_valid() {
        let set = enumerate_cdf_set(0.25).unwrap();
        let unique: std::collections::HashSet<_> = set.iter().cloned().collect();
        assert_eq!(unique.len(), set.len());
        assert_eq!(set.len() as u128, cdf_family_size(4).unwrap());
        for f in &set {
            assert!(DiscreteCdf::from_counts(f.steps(), f.counts().to_vec()).is_ok());
        }
    }

    #[test]
    fn enumeration_rejects_non_integral_steps_and_caps() {
        assert!(matches!(enumerate_cdf_set(0.3), Err(PricingError::InvalidArgument(_))));
        assert!(matches!(enumerate_cdf_set(0.1), Err(PricingError::Capacity { .. })));
    }

    #[test]
    fn eval_interpolates_and_saturates() {
        let f = DiscreteCdf::from_values(0.5, &[0.0, 0.0, 0.5, 0.5, 1.0]).unwrap();
        // between 0.5 (value 0.5) and 1 (value 1): 0.5 + (1 - 0.5)/0.5 * 0.25
        assert_abs_diff_eq!(cdf_eval(&f, 0.75), 0.75, epsilon = 1e-15);
        assert_eq!(cdf_eval(&f, -2.0), 0.0);
        assert_eq!(cdf_eval(&f, 2.0), 1.0);
        assert_eq!(cdf_eval(&f, 0.0), 0.5);
        assert_eq!(cdf_eval(&f, 0.25), 0.5);
        assert_abs_diff_eq!(cdf_eval(&f, -0.25), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn discretize_uniform() {
        let f = discretize_cdf(&uniform, 0.5).unwrap();
        assert_eq!(f.values(), vec![0.0, 0.0, 0.5, 0.5, 1.0]);
    }

    #[test]
    fn discretize_point_mass() {
        let f = discretize_cdf(&point_mass_at_zero, 0.5).unwrap();
        assert_eq!(f.values(), vec![0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn discretize_fixed_point() {
        for f in enumerate_cdf_set(1.0 / 3.0).unwrap() {
            let g = discretize_cdf(&f, 1.0 / 3.0).unwrap();
            assert_eq!(g, f);
        }
    }

    #[test]
    fn discretize_rejects_non_monotone() {
        let bad = |v: f64| if v < 0.0 { 0.6 } else if v < 1.0 { 0.2 } else { 1.0 };
        assert!(discretize_cdf(&bad, 0.5).is_err());
        assert!(discretize_cdf(&uniform, 0.3).is_err());
    }

    #[test]
    fn from_counts_rejects_broken_invariants() {
        assert!(DiscreteCdf::from_counts(1, vec![0, 1]).is_err());
        assert!(DiscreteCdf::from_counts(1, vec![1, 0, 1]).is_err());
        assert!(DiscreteCdf::from_counts(1, vec![0, 0, 0]).is_err());
        assert!(DiscreteCdf::from_values(0.5, &[0.0, 0.3, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn left_limit_only_differs_at_minus_one() {
        let f = DiscreteCdf::from_values(0.5, &[0.5, 0.5, 0.5, 1.0, 1.0]).unwrap();
        assert_eq!(f.cdf(-1.0), 0.5);
        assert_eq!(f.cdf_left(-1.0), 0.0);
        assert_eq!(f.cdf_left(0.25), f.cdf(0.25));
    }

    #[test]
    fn quantile_inverts_the_cdf() {
        let f = DiscreteCdf::from_values(0.5, &[0.5, 0.5, 0.5, 1.0, 1.0]).unwrap();
        assert_eq!(f.quantile(0.3), -1.0);
        assert_abs_diff_eq!(f.quantile(0.75), 0.25, epsilon = 1e-12);
        let g = DiscreteCdf::from_values(0.5, &[0.0, 0.0, 0.5, 0.5, 1.0]).unwrap();
        assert_abs_diff_eq!(g.quantile(0.25), -0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(g.quantile(0.75), 0.75, epsilon = 1e-12);
    }

    fn random_cdf() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-1.0f64..1.0, 0.01f64..1.0), 1..6)
    }

    proptest! {
        // F = normalized mixture of uniform pieces [c - r, c + r] clipped to [-1, 1]
        #[test]
        fn sandwich_and_membership(pieces in random_cdf(), inv in 1u32..7) {
            let gamma = 1.0 / inv as f64;
            let total = pieces.len() as f64;
            let cdf = |v: f64| -> f64 {
                if v >= 1.0 { return 1.0; }
                pieces.iter().map(|&(c, r)| {
                    let (lo, hi) = ((c - r).max(-1.0), (c + r).min(1.0));
                    if v < lo { 0.0 } else if v >= hi { 1.0 } else { (v - lo) / (hi - lo) }
                }).sum::<f64>() / total
            };
            let hat = discretize_cdf(&cdf, gamma).unwrap();
            for (i, x) in hat.grid_points().iter().enumerate().take(hat.counts().len() - 1) {
                let f = cdf(*x);
                prop_assert!(hat.value_at(i) <= f + 1e-12);
                prop_assert!(f <= hat.value_at(i) + gamma + 1e-12);
            }
            if inv <= 4 {
                let family = enumerate_cdf_set(gamma).unwrap();
                prop_assert!(family.contains(&hat));
            }
        }
    }
}
