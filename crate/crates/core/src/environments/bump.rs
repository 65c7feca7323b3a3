//! Hard instances built from bump functions stacked on a random chain of
//! nested intervals.
//!
//! Level `k` has width `w_k = 3^{-k!}` (with `w_0 = 1`) and sits at a uniformly
//! random one of the `Q_k = w_{k-1} / (3 w_k)` slots inside the plateau of level
//! `k - 1`. The sum `f = C_f * sum_k w_k B((v - a_k)/w_k)` peaks on the deepest
//! plateau, and the demand curve built from it hides its revenue peak there.
//!
//! Two bump shapes are offered. [`BumpShape::Literal`] is the literal
//! `exp(1/((3v-1)^2 - 1))` formula, which only reaches `1/e` at the plateau edge
//! and therefore jumps. [`BumpShape::Continuous`] multiplies it by `e` so the
//! pieces join; it is the default for instances because only it yields a
//! nonincreasing demand rate.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ContextSource, SaleEnvironment};
use crate::error::{PricingError, Result};

pub const MAX_DEPTH: usize = 5;
pub const DEFAULT_DEPTH: usize = 3;
pub const DEFAULT_C_F: f64 = 1.0 / 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BumpShape {
    Literal,
    #[default]
    Continuous,
}

impl BumpShape {
    pub fn name(self) -> &'static str {
        match self {
            BumpShape::Literal => "literal",
            BumpShape::Continuous => "continuous",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(BumpShape::Literal),
            "continuous" => Ok(BumpShape::Continuous),
            _ => Err(PricingError::Parse(format!("unknown bump shape '{s}'"))),
        }
    }
}

/// The literal five-piece bump: 0 outside `(0, 1)`, 1 on `[1/3, 2/3]`,
/// `exp(1/((3v-1)^2 - 1))` and `exp(1/((3v-2)^2 - 1))` on the flanks.
pub fn bump(v: f64) -> f64 {
    bump_shape(v, BumpShape::Literal)
}

pub fn bump_shape(v: f64, shape: BumpShape) -> f64 {
    let s = if v <= 0.0 || v >= 1.0 {
        return 0.0;
    } else if v < 1.0 / 3.0 {
        3.0 * v - 1.0
    } else if v <= 2.0 / 3.0 {
        return 1.0;
    } else {
        3.0 * v - 2.0
    };
    let core = 1.0 / (s * s - 1.0);
    match shape {
        BumpShape::Literal => core.exp(),
        BumpShape::Continuous => (1.0 + core).exp(),
    }
}

/// `bump((v - a)/(b - a))`.
pub fn rescaled_bump(v: f64, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(PricingError::invalid(format!("bump interval needs a < b, got [{a}, {b}]")));
    }
    Ok(bump((v - a) / (b - a)))
}

/// `w_k = 3^{-k!}`, with `w_0 = 1`.
pub fn level_width(k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let fact: i32 = (1..=k as i32).product();
    3f64.powi(-fact)
}

/// `log_3 Q_k`: 0 for the forced levels 1 and 2, `k! - (k-1)! - 1` beyond.
pub fn level_slot_exponent(k: usize) -> u32 {
    if k <= 2 {
        return 0;
    }
    let fact = |n: usize| (1..=n as u32).product::<u32>();
    fact(k) - fact(k - 1) - 1
}

/// Number of slots `Q_k` at level `k`.
pub fn level_slots(k: usize) -> BigUint {
    BigUint::from(3u32).pow(level_slot_exponent(k))
}

/// A sampled chain of nested intervals and the demand curve it defines.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpInstance {
    pub depth: usize,
    pub c_f: f64,
    pub b: f64,
    pub shape: BumpShape,
    /// Slot index at levels `1..=depth`; levels 1 and 2 are always 0.
    pub indices: Vec<BigUint>,
    pub seed: Option<u64>,
    starts: Vec<f64>,
    widths: Vec<f64>,
}

fn check_depth(depth: usize) -> Result<()> {
    if (1..=MAX_DEPTH).contains(&depth) {
        Ok(())
    } else {
        Err(PricingError::invalid(format!("bump depth must lie in 1..={MAX_DEPTH}, got {depth}")))
    }
}

/// Draws a chain of the given depth, uniform over the slots at each level.
pub fn sample_interval_chain<R: Rng + ?Sized>(depth: usize, rng: &mut R) -> Result<BumpInstance> {
    check_depth(depth)?;
    let indices = (1..=depth)
        .map(|k| {
            // Q_k is a power of 3, so uniform ternary digits give a uniform slot
            let mut i = BigUint::zero();
            for _ in 0..level_slot_exponent(k) {
                i = i * 3u32 + rng.random_range(0..3u32);
            }
            i
        })
        .collect();
    BumpInstance::from_indices(depth, DEFAULT_C_F, indices, BumpShape::default())
}

impl BumpInstance {
    /// Samples a chain from a ChaCha8 stream seeded with `seed`.
    pub fn sample(depth: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inst = sample_interval_chain(depth, &mut rng)?;
        inst.seed = Some(seed);
        Ok(inst)
    }

    /// Rebuilds the chain from explicit slot indices (levels `1..=depth`).
    pub fn from_indices(depth: usize, c_f: f64, indices: Vec<BigUint>, shape: BumpShape) -> Result<Self> {
        check_depth(depth)?;
        if !(c_f > 0.0) {
            return Err(PricingError::invalid(format!("C_f must be positive, got {c_f}")));
        }
        if indices.len() != depth {
            return Err(PricingError::invalid(format!("expected {depth} slot indices, got {}", indices.len())));
        }
        let mut starts = vec![0.0];
        let mut widths = vec![1.0];
        for (k, i) in (1..=depth).zip(&indices) {
            if *i >= level_slots(k) {
                return Err(PricingError::invalid(format!("slot {i} out of range at level {k}")));
            }
            let (prev_a, prev_w, w) = (starts[k - 1], widths[k - 1], level_width(k));
            let offset = i.to_f64().unwrap_or(f64::INFINITY) * w;
            starts.push(prev_a + prev_w / 3.0 + offset);
            widths.push(w);
        }
        Ok(Self { depth, c_f, b: (6.0 * c_f + 1.0) / 2.0, shape, indices, seed: None, starts, widths })
    }

    pub fn with_shape(mut self, shape: BumpShape) -> Self {
        self.shape = shape;
        self
    }

    /// `[a_k, b_k]` for `k` in `0..=depth`.
    pub fn interval(&self, k: usize) -> (f64, f64) {
        (self.starts[k], self.starts[k] + self.widths[k])
    }

    pub fn width(&self, k: usize) -> f64 {
        self.widths[k]
    }

    /// `f(v) = C_f * sum_{k=0..K} w_k B((v - a_k)/w_k)`.
    pub fn f_eval(&self, v: f64) -> f64 {
        let sum: f64 = self
            .starts
            .iter()
            .zip(&self.widths)
            .map(|(&a, &w)| w * bump_shape((v - a) / w, self.shape))
            .sum();
        self.c_f * sum
    }

    /// Plateau value `f* = C_f * sum_k w_k`.
    pub fn f_max(&self) -> f64 {
        self.c_f * self.widths.iter().sum::<f64>()
    }

    fn g_eval(&self, s: f64) -> f64 {
        let f = self.f_eval(s);
        f / (f + 1.0)
    }

    /// Revenue curve `D(v)`: `v` up to `b`, then `b + (1 - b) G((v - b)/(1 - b))` on `(b, 1)`.
    pub fn revenue_d(&self, v: f64) -> f64 {
        if v <= self.b {
            v
        } else if v < 1.0 {
            self.b + (1.0 - self.b) * self.g_eval((v - self.b) / (1.0 - self.b))
        } else {
            0.0
        }
    }

    /// Acceptance probability `d(v) = D(v)/v`, equal to 1 on `[0, b]` and 0 from 1 on.
    pub fn demand_d(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(PricingError::invalid(format!("price must be nonnegative, got {v}")));
        }
        Ok(if v <= self.b { 1.0 } else { self.revenue_d(v) / v })
    }

    /// Bernoulli draw with success probability `d(v)`.
    pub fn post_price<R: Rng + ?Sized>(&self, v: f64, rng: &mut R) -> Result<bool> {
        let p = self.demand_d(v)?;
        Ok(rng.random::<f64>() < p)
    }

    /// Center of the deepest plateau mapped to price space.
    pub fn peak_price(&self) -> f64 {
        let (a, w) = (self.starts[self.depth], self.widths[self.depth]);
        self.b + (1.0 - self.b) * (a + w / 2.0)
    }

    /// Largest expected revenue `max_v D(v)`.
    pub fn peak_revenue(&self) -> f64 {
        let f = self.f_max();
        self.b + (1.0 - self.b) * f / (f + 1.0)
    }

    /// Flat text record: depth, C_f, b, the slot index at levels 3..K, seed and shape.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "depth {}", self.depth);
        let _ = writeln!(out, "c_f {:?}", self.c_f);
        let _ = writeln!(out, "b {:?}", self.b);
        for k in 3..=self.depth {
            let _ = writeln!(out, "index {} {}", k, self.indices[k - 1]);
        }
        match self.seed {
            Some(s) => {
                let _ = writeln!(out, "seed {s}");
            }
            None => out.push_str("seed none\n"),
        }
        let _ = writeln!(out, "shape {}", self.shape.name());
        out
    }

    pub fn parse(record: &str) -> Result<Self> {
        let bad = |m: String| PricingError::Parse(m);
        let (mut depth, mut c_f, mut b, mut seed, mut shape) = (None, None, None, None, BumpShape::default());
        let mut deep: Vec<(usize, BigUint)> = Vec::new();
        for line in record.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            let one = || rest.first().copied().ok_or_else(|| bad(format!("missing value in '{line}'")));
            match key {
                "depth" => depth = Some(one()?.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "c_f" => c_f = Some(one()?.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "b" => b = Some(one()?.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "seed" => {
                    seed = match one()? {
                        "none" => None,
                        s => Some(s.parse::<u64>().map_err(|e| bad(e.to_string()))?),
                    }
                }
                "shape" => shape = BumpShape::parse(one()?)?,
                "index" if rest.len() == 2 => {
                    let k = rest[0].parse::<usize>().map_err(|e| bad(e.to_string()))?;
                    let i = rest[1].parse::<BigUint>().map_err(|e| bad(e.to_string()))?;
                    deep.push((k, i));
                }
                _ => return Err(bad(format!("unrecognized line '{line}'"))),
            }
        }
        let depth = depth.ok_or_else(|| bad("missing depth".into()))?;
        let c_f = c_f.ok_or_else(|| bad("missing c_f".into()))?;
        check_depth(depth)?;
        let mut indices = vec![BigUint::zero(); depth];
        for (k, i) in deep {
            if !(3..=depth).contains(&k) {
                return Err(bad(format!("index for level {k} outside 3..={depth}")));
            }
            indices[k - 1] = i;
        }
        let mut inst = Self::from_indices(depth, c_f, indices, shape)?;
        if let Some(b) = b {
            if (b - inst.b).abs() > 1e-15 {
                return Err(bad(format!("b = {b} disagrees with C_f (expected {})", inst.b)));
            }
        }
        inst.seed = seed;
        Ok(inst)
    }
}

/// One bump instance per context coordinate; contexts are one-hot, so round
/// `t` faces the instance of its active coordinate. Feedback is Bernoulli
/// with the instance's demand at the posted price.
#[derive(Debug, Clone)]
pub struct BumpEnv {
    pub instances: Vec<BumpInstance>,
    contexts: ContextSource,
    rng: ChaCha8Rng,
    active: usize,
}

impl BumpEnv {
    /// `dim` independent chains of the given depth, all derived from `seed`.
    pub fn new(dim: usize, depth: usize, shape: BumpShape, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(PricingError::invalid("dimension must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let instances = (0..dim)
            .map(|_| BumpInstance::sample(depth, rng.random()).map(|i| i.with_shape(shape)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { instances, contexts: ContextSource::OneHot { dim }, rng, active: 0 })
    }

    pub fn active_instance(&self) -> &BumpInstance {
        &self.instances[self.active]
    }
}

impl SaleEnvironment for BumpEnv {
    fn dim(&self) -> usize {
        self.instances.len()
    }

    fn next_context(&mut self, t: usize) -> Vec<f64> {
        let x = self.contexts.draw(t, &mut self.rng);
        self.active = x.iter().position(|&c| c == 1.0).unwrap_or(0);
        x
    }

    fn post_price(&mut self, _t: usize, price: f64) -> bool {
        let inst = &self.instances[self.active];
        inst.post_price(price.max(0.0), &mut self.rng).unwrap_or(false)
    }

    fn sale_probability(&self, price: f64) -> f64 {
        self.active_instance().demand_d(price.max(0.0)).unwrap_or(0.0)
    }

    fn optimal_price(&self, _vmax: f64) -> (f64, f64) {
        let inst = self.active_instance();
        (inst.peak_price(), inst.peak_revenue())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bump_examples() {
        assert_eq!(bump(0.5), 1.0);
        assert_eq!(bump(0.0), 0.0);
        assert_eq!(bump(1.0), 0.0);
        assert_abs_diff_eq!(bump(1.0 / 6.0), (-4.0f64 / 3.0).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(bump(1.0 / 6.0), 0.263597, epsilon = 1e-6);
        assert_abs_diff_eq!(bump(5.0 / 6.0), bump(1.0 / 6.0), epsilon = 1e-15);
    }

    #[test]
    fn rescaled_examples() {
        let (a, b) = (1.0 / 3.0, 2.0 / 3.0);
        assert_eq!(rescaled_bump(0.5, a, b).unwrap(), 1.0);
        assert_eq!(rescaled_bump(a, a, b).unwrap(), 0.0);
        assert_abs_diff_eq!(rescaled_bump(a + 1.0 / 18.0, a, b).unwrap(), 0.263597, epsilon = 1e-6);
        assert!(rescaled_bump(0.5, 0.6, 0.6).is_err());
    }

    #[test]
    fn continuous_shape_joins_the_plateau() {
        for &eps in &[1e-3, 1e-5, 1e-7] {
            assert!((bump_shape(1.0 / 3.0 - eps, BumpShape::Continuous) - 1.0).abs() < 10.0 * eps);
            assert!((bump_shape(2.0 / 3.0 + eps, BumpShape::Continuous) - 1.0).abs() < 10.0 * eps);
        }
        // the literal shape stops short at 1/e
        assert!((bump(1.0 / 3.0 - 1e-9) - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn slot_counts() {
        assert_eq!(level_slots(1), BigUint::from(1u32));
        assert_eq!(level_slots(2), BigUint::from(1u32));
        assert_eq!(level_slots(3), BigUint::from(27u32));
        assert_eq!(level_slots(4), BigUint::from(3u32).pow(17));
        assert_eq!(level_slots(5), BigUint::from(3u32).pow(95));
        // Q_k = w_{k-1} / (3 w_k)
        for k in 2..=4 {
            let q = level_width(k - 1) / (3.0 * level_width(k));
            assert!((q / level_slots(k).to_f64().unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn forced_prefix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let one = sample_interval_chain(1, &mut rng).unwrap();
            assert_abs_diff_eq!(one.interval(1).0, 1.0 / 3.0, epsilon = 1e-15);
            let two = sample_interval_chain(2, &mut rng).unwrap();
            assert_abs_diff_eq!(two.interval(2).0, 4.0 / 9.0, epsilon = 1e-15);
            assert_abs_diff_eq!(two.interval(2).1, 5.0 / 9.0, epsilon = 1e-15);
        }
        assert!(sample_interval_chain(0, &mut rng).is_err());
        assert!(sample_interval_chain(6, &mut rng).is_err());
    }

    #[test]
    fn chain_nests_in_middle_thirds() {
        for seed in 0..50 {
            let inst = BumpInstance::sample(4, seed).unwrap();
            for k in 1..=4 {
                let (a, b) = inst.interval(k);
                let (pa, pb) = inst.interval(k - 1);
                let w = inst.width(k - 1);
                assert!(a >= pa + w / 3.0 - 1e-15 && b <= pb - w / 3.0 + 1e-15, "level {k}");
            }
        }
    }

    #[test]
    fn f_plateau_and_bound() {
        let inst = BumpInstance::sample(2, 0).unwrap();
        let (a, b) = inst.interval(2);
        let mid = 0.5 * (a + b);
        assert_abs_diff_eq!(inst.f_eval(mid), 13.0 / 540.0, epsilon = 1e-15);
        assert_eq!(inst.f_eval(0.0), 0.0);
        for shape in [BumpShape::Literal, BumpShape::Continuous] {
            let inst = BumpInstance::sample(3, 5).unwrap().with_shape(shape);
            for k in 0..=100_000 {
                assert!(inst.f_eval(k as f64 / 1e5) <= 1.5 * inst.c_f);
            }
        }
    }

    #[test]
    fn demand_examples() {
        let inst = BumpInstance::sample(2, 0).unwrap();
        assert_abs_diff_eq!(inst.b, 11.0 / 20.0, epsilon = 1e-15);
        assert_eq!(inst.demand_d(inst.b).unwrap(), 1.0);
        assert_eq!(inst.demand_d(1.0).unwrap(), 0.0);
        assert_eq!(inst.demand_d(0.0).unwrap(), 1.0);
        assert!(inst.demand_d(-0.1).is_err());
        let v = inst.peak_price();
        let d_star = 0.55 + 0.45 * (13.0 / 553.0);
        assert_abs_diff_eq!(d_star, 0.560579, epsilon = 1e-6);
        assert_abs_diff_eq!(inst.demand_d(v).unwrap(), d_star / v, epsilon = 1e-14);
        assert_abs_diff_eq!(inst.peak_revenue(), d_star, epsilon = 1e-15);
    }

    #[test]
    fn continuous_demand_is_a_valid_demand_curve() {
        let inst = BumpInstance::sample(3, 17).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=120_000 {
            let v = k as f64 * 1e-5;
            let d = inst.demand_d(v).unwrap();
            assert!(d <= prev + 1e-15, "d increases at {v}");
            prev = d;
        }
        // the peak is the best price on a fine grid
        let best = (0..=100_000).map(|k| inst.revenue_d(k as f64 * 1e-5)).fold(0.0, f64::max);
        assert!(best <= inst.peak_revenue() + 1e-15);
    }

    #[test]
    fn literal_demand_is_not_monotone() {
        let inst = BumpInstance::sample(1, 0).unwrap().with_shape(BumpShape::Literal);
        // D jumps up where the level-0 bump reaches its plateau
        let edge = inst.b + (1.0 - inst.b) / 3.0;
        let before = inst.demand_d(edge - 1e-9).unwrap();
        let after = inst.demand_d(edge + 1e-9).unwrap();
        assert!(after > before);
    }

    #[test]
    fn feedback_frequencies() {
        let inst = BumpInstance::sample(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!((0..1000).all(|_| inst.post_price(0.1, &mut rng).unwrap()));
        assert!((0..1000).all(|_| !inst.post_price(1.5, &mut rng).unwrap()));
        let draws = 1_000_000;
        let sold = (0..draws).filter(|_| inst.post_price(0.9, &mut rng).unwrap()).count();
        let rate = sold as f64 / draws as f64;
        assert!((rate - inst.demand_d(0.9).unwrap()).abs() <= 0.002);
    }

    #[test]
    fn record_round_trips() {
        for depth in 1..=5 {
            let inst = BumpInstance::sample(depth, 99).unwrap();
            let text = inst.serialize();
            let back = BumpInstance::parse(&text).unwrap();
            assert_eq!(back, inst);
            assert_eq!(back.serialize(), text);
        }
        assert!(BumpInstance::parse("depth 3\nc_f 0.1\nindex 3 27\n").is_err());
        assert!(BumpInstance::parse("c_f 0.1\n").is_err());
    }

    #[test]
    fn env_faces_the_active_instance() {
        let mut env = BumpEnv::new(3, 3, BumpShape::Continuous, 4).unwrap();
        for t in 0..50 {
            let x = env.next_context(t);
            let i = x.iter().position(|&c| c == 1.0).unwrap();
            let (v, r) = env.optimal_price(1.0);
            assert_eq!(v, env.instances[i].peak_price());
            assert_abs_diff_eq!(r, v * env.sale_probability(v), epsilon = 1e-12);
        }
        let mut single = BumpEnv::new(1, 2, BumpShape::Continuous, 0).unwrap();
        assert_eq!(single.next_context(0), vec![1.0]);
    }
}
