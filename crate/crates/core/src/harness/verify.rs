//! Property suites behind the `verify` command and the acceptance tests.
//!
//! Each check runs a randomized or exhaustive experiment and reports one
//! pass/fail outcome with the measured numbers.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::config::{EnvironmentSpec, RunConfig};
use super::run::run_once;
use super::sweep::{sweep_t, SweepTable};
use crate::environments::bump::{bump_shape, level_width};
use crate::environments::noise::optimal_price_dense;
use crate::environments::{bump, sample_interval_chain, BumpInstance, BumpShape, NoiseModel};
use crate::error::Result;
use crate::exp4::Exp4Agent;
use crate::grid::{dot, expected_revenue, norm2, vector_ceil_round, Cdf, GridSpec};
use crate::policy_space::{discretize_cdf, enumerate_cdf_set, lv_policy_price, DiscreteCdf};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub criterion: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] criterion {} ({}): {}", self.criterion, self.name, self.detail)
    }
}

/// Continuous CDF on `[-1, 1]` interpolating sorted knots, 0 below and 1 above.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearCdf {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinearCdf {
    /// Between 1 and 8 interior knots with uniform positions and sorted uniform levels.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let m = rng.random_range(1..=8);
        let mut xs: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut ps: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        xs.sort_by(f64::total_cmp);
        ps.sort_by(f64::total_cmp);
        let mut knots = vec![(-1.0, 0.0)];
        knots.extend(xs.into_iter().zip(ps));
        knots.push((1.0, 1.0));
        Self { knots }
    }
}

impl Cdf for PiecewiseLinearCdf {
    fn cdf(&self, v: f64) -> f64 {
        if v <= -1.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        for w in self.knots.windows(2) {
            let ((x0, p0), (x1, p1)) = (w[0], w[1]);
            if v <= x1 {
                return if x1 > x0 { p0 + (p1 - p0) * (v - x0) / (x1 - x0) } else { p1 };
            }
        }
        1.0
    }
}

fn random_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let n = norm2(&g);
        if n > 1e-9 {
            return g.into_iter().map(|c| c / n).collect();
        }
    }
}

/// The policy built from the rounded-up parameter and the rounded-down CDF
/// loses at most `(3B + 5) gamma` against the best price.
pub fn check_realizability(trials: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst_ratio = 0.0f64;
    for _ in 0..trials {
        let dim = rng.random_range(1..=3usize);
        let bound = rng.random_range(1..=2u32);
        let gamma = if rng.random::<bool>() { 0.1 } else { 0.05 };
        let delta = gamma / (dim as f64).sqrt();
        let theta: Vec<f64> = random_direction(dim, &mut rng).into_iter().map(|c| c * rng.random::<f64>()).collect();
        let x: Vec<f64> =
            random_direction(dim, &mut rng).into_iter().map(|c| c * bound as f64 * rng.random::<f64>()).collect();
        let noise = PiecewiseLinearCdf::random(&mut rng);

        let spec = GridSpec::new(delta, gamma, bound, dim, 1)?;
        let theta_hat = vector_ceil_round(&theta, delta)?;
        let f_hat = discretize_cdf(&noise, gamma)?;
        let price = lv_policy_price(&theta_hat, &f_hat, &x, &spec)?;
        let u = dot(&x, &theta);
        let got = expected_revenue(price, u, &noise);
        let (_, best) = optimal_price_dense(u, &noise, bound as f64 + 1.0);
        let allowed = (3.0 * bound as f64 + 5.0) * gamma + 1e-6;
        let loss = best - got;
        worst_ratio = worst_ratio.max(loss / allowed);
        if loss > allowed {
            failures += 1;
        }
    }
    Ok(CheckOutcome {
        criterion: 3,
        name: "realizability",
        passed: failures == 0,
        detail: format!("{trials} triples, {failures} over the (3B+5)gamma bound, worst loss/bound = {worst_ratio:.4}"),
    })
}

/// `|F_gamma| = C(3/gamma, 1/gamma)`: 3, 15, 84 members for `gamma = 1, 1/2, 1/3`.
pub fn check_cdf_counts() -> Result<CheckOutcome> {
    let counts: Vec<usize> =
        [1.0, 0.5, 1.0 / 3.0].iter().map(|&g| enumerate_cdf_set(g).map(|s| s.len())).collect::<Result<_>>()?;
    Ok(CheckOutcome {
        criterion: 4,
        name: "CDF family size",
        passed: counts == [3, 15, 84],
        detail: format!("counts {counts:?}, expected [3, 15, 84]"),
    })
}

/// `F_hat(i gamma) <= F(i gamma) <= F_hat(i gamma) + gamma` at every grid point but `v = 1`.
pub fn check_sandwich(trials: usize, seed: u64) -> Result<CheckOutcome> {
    let gamma = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..trials {
        let f = PiecewiseLinearCdf::random(&mut rng);
        let hat = discretize_cdf(&f, gamma)?;
        for i in 0..hat.counts().len() - 1 {
            let (fv, hv) = (f.cdf(hat.grid_point(i)), hat.value_at(i));
            if hv > fv + 1e-12 || fv > hv + gamma + 1e-12 {
                violations += 1;
            }
        }
    }
    Ok(CheckOutcome {
        criterion: 5,
        name: "sandwich",
        passed: violations == 0,
        detail: format!("{trials} random CDFs at gamma = 1/20, {violations} grid violations"),
    })
}

/// Largest difference quotient `|B(v + h) - B(v)| / h` over `v = j / samples`.
pub fn numeric_lipschitz(shape: BumpShape, samples: usize, h: f64) -> f64 {
    (0..samples)
        .map(|j| {
            let v = j as f64 / samples as f64;
            (bump_shape(v + h, shape) - bump_shape(v, shape)).abs() / h
        })
        .fold(0.0, f64::max)
}

/// Chi-square p-value of level-3 slot draws against the uniform distribution on 27 slots.
pub fn slot_uniformity_p_value(draws: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = [0usize; 27];
    for _ in 0..draws {
        let inst = sample_interval_chain(3, &mut rng)?;
        let i = inst.indices[2].to_u32_digits().first().copied().unwrap_or(0) as usize;
        hist[i] += 1;
    }
    let expected = draws as f64 / 27.0;
    let stat: f64 = hist.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let chi = ChiSquared::new(26.0).expect("positive degrees of freedom");
    Ok(1.0 - chi.cdf(stat))
}

/// The bump-family invariants. Each sub-check is listed in the detail.
pub fn check_bump_invariants(seed: u64) -> Result<CheckOutcome> {
    let mut parts = Vec::new();
    let mut all = true;
    let mut note = |ok: bool, text: String| {
        all &= ok;
        parts.push(format!("{}{}", if ok { "" } else { "NOT " }, text));
    };

    let lip_literal = numeric_lipschitz(BumpShape::Literal, 1_000_000, 1e-6);
    let lip_smooth = numeric_lipschitz(BumpShape::Continuous, 1_000_000, 1e-6);
    note(lip_literal <= 6.001, format!("Lipschitz <= 6.001 (bump {lip_literal:.4e}, continuous variant {lip_smooth:.4})"));

    let inst = BumpInstance::sample(3, seed)?;
    let (a_k, b_k) = inst.interval(inst.depth);
    let grid: Vec<f64> = (0..=100_000).map(|j| j as f64 / 1e5).collect();
    let fs: Vec<f64> = grid.iter().map(|&v| inst.f_eval(v)).collect();
    let peak = fs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let first_peak = fs.iter().position(|&f| f == peak).unwrap_or(0);
    let rises = fs[..=first_peak].windows(2).all(|w| w[1] >= w[0] - 1e-15);
    let falls = fs[first_peak..].windows(2).all(|w| w[1] <= w[0] + 1e-15);
    let turn_inside = (a_k..=b_k).contains(&grid[first_peak]);
    note(rises && falls && turn_inside, "f unimodal with its turn in [a_K, b_K]".into());

    let mut d_prev = f64::INFINITY;
    let mut rate_prev = f64::INFINITY;
    let mut d_mono = true;
    let mut rate_mono = true;
    for j in 0..=120_000 {
        let v = j as f64 * 1e-5;
        let d = inst.demand_d(v)?;
        d_mono &= d <= d_prev + 1e-15;
        d_prev = d;
        if v > 0.0 {
            let rate = inst.revenue_d(v) / v;
            rate_mono &= rate <= rate_prev + 1e-15;
            rate_prev = rate;
        }
    }
    note(d_mono && inst.demand_d(0.0)? == 1.0, "d nonincreasing on [0, 1.2] with d(0) = 1".into());
    note(rate_mono, "D(v)/v nonincreasing".into());
    note(peak <= 1.5 * inst.c_f, format!("max f = {peak:.6} <= 1.5 C_f"));

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut prefix = true;
    for _ in 0..100 {
        let two = sample_interval_chain(2, &mut rng)?;
        let (a1, b1) = two.interval(1);
        let (a2, b2) = two.interval(2);
        prefix &= (a1 - 1.0 / 3.0).abs() < 1e-15 && (b1 - 2.0 / 3.0).abs() < 1e-15;
        prefix &= (a2 - 4.0 / 9.0).abs() < 1e-15 && (b2 - 5.0 / 9.0).abs() < 1e-15;
    }
    note(prefix, "forced prefix [1/3, 2/3], [4/9, 5/9]".into());

    let p = slot_uniformity_p_value(100_000, seed)?;
    note(p > 0.01 && level_width(3) == 3f64.powi(-6), format!("Q_3 = 27 uniform, chi-square p = {p:.4}"));
    let _ = bump(0.5);

    Ok(CheckOutcome { criterion: 6, name: "bump invariants", passed: all, detail: parts.join("; ") })
}

/// Two experts on a two-armed Bernoulli bandit with means 0.6 and 0.4: mean
/// pseudo-regret stays below `4 sqrt(T K ln N)`.
pub fn check_exp4_sanity(horizon: usize, seeds: u64) -> Result<CheckOutcome> {
    let means = [0.6, 0.4];
    let advice = [0usize, 1];
    let mut total = 0.0;
    for seed in 0..seeds {
        let mut agent = Exp4Agent::new(2, 2, horizon, 1.0, seed)?;
        let mut env_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1 << 32));
        let mut regret = 0.0;
        for _ in 0..horizon {
            let probs = agent.action_distribution(&advice)?;
            let a = agent.sample_action(&probs)?;
            let reward = if env_rng.random::<f64>() < means[a] { 1.0 } else { 0.0 };
            agent.update(&advice, a, probs[a], reward)?;
            regret += means[0] - means[a];
        }
        total += regret;
    }
    let mean = total / seeds as f64;
    let bound = 4.0 * (horizon as f64 * 2.0 * 2f64.ln()).sqrt();
    Ok(CheckOutcome {
        criterion: 7,
        name: "EXP-4 sanity",
        passed: mean <= bound,
        detail: format!("T = {horizon}, {seeds} seeds, mean regret {mean:.2} <= bound {bound:.2}"),
    })
}

/// The on-grid toy configuration used for the D2-EXP4 trend check.
pub fn toy_lv_config(seed: u64) -> Result<RunConfig> {
    let mut cfg = RunConfig::lv_default();
    let noise = NoiseModel::Discrete(DiscreteCdf::from_values(0.5, &[0.0, 0.0, 0.5, 0.5, 1.0])?);
    cfg.environment = EnvironmentSpec::LinearValuation { theta_star: Some(vec![0.5]), noise, onehot: true };
    cfg.horizon = 5000;
    cfg.seed = seed;
    Ok(cfg)
}

/// D2-EXP4 on the 75-policy toy: per-round expected regret falls from the first
/// quarter to the last and ends inside the `(3B + 5) gamma` band.
pub fn check_lv_trend(seeds: u64) -> Result<CheckOutcome> {
    let mut first = 0.0;
    let mut last = 0.0;
    let mut policies = 0;
    for seed in 0..seeds {
        let cfg = toy_lv_config(seed)?;
        let rec = run_once(&cfg)?;
        policies = rec.metadata.num_policies;
        let q = rec.rounds.len() / 4;
        let per_round: Vec<f64> = rec
            .rounds
            .iter()
            .scan(0.0, |prev, r| {
                let d = r.cum_regret - *prev;
                *prev = r.cum_regret;
                Some(d)
            })
            .collect();
        first += per_round[..q].iter().sum::<f64>() / q as f64;
        last += per_round[per_round.len() - q..].iter().sum::<f64>() / q as f64;
    }
    first /= seeds as f64;
    last /= seeds as f64;
    let band = (3.0 + 5.0) * 0.5 + 0.05;
    Ok(CheckOutcome {
        criterion: 8,
        name: "D2-EXP4 trend",
        passed: policies == 75 && last < first && last <= band,
        detail: format!(
            "{policies} policies, {seeds} seeds, first-quarter regret/round {first:.4}, last-quarter {last:.4}, band {band}"
        ),
    })
}

/// Two identical `run-lp` configurations give byte-identical CSV.
pub fn check_determinism(horizon: usize, seed: u64) -> Result<CheckOutcome> {
    let mut cfg = RunConfig::lp_default();
    cfg.horizon = horizon;
    cfg.seed = seed;
    let a = run_once(&cfg)?.to_csv();
    let b = run_once(&cfg)?.to_csv();
    let mut other = cfg.clone();
    other.seed = seed + 1;
    let c = run_once(&other)?.to_csv();
    Ok(CheckOutcome {
        criterion: 9,
        name: "determinism",
        passed: a == b && a != c,
        detail: format!("{} bytes, identical = {}, differs across seeds = {}", a.len(), a == b, a != c),
    })
}

/// The experiment sweep: Linear-EXP4 on the Gaussian environment with `d = 2`, `B = 1`, `sigma = 1/4`.
pub fn slope_sweep(k_min: u32, k_max: u32, reps: usize, seed: u64) -> Result<SweepTable> {
    let mut base = RunConfig::lp_default();
    base.seed = seed;
    let ks: Vec<u32> = (k_min..=k_max).collect();
    sweep_t(&base, &ks, reps)
}

/// Log-log slope of mean regret against `T` within `[0.60, 0.74]`.
pub fn check_slope(table: &SweepTable) -> Result<CheckOutcome> {
    let fit = table.fit()?;
    Ok(CheckOutcome {
        criterion: 1,
        name: "slope",
        passed: (0.60..=0.74).contains(&fit.slope),
        detail: format!(
            "{} horizons from {} to {}, slope {:.4} (r^2 {:.3}), target [0.60, 0.74]",
            table.points.len(),
            table.points.first().map_or(0, |p| p.horizon),
            table.points.last().map_or(0, |p| p.horizon),
            fit.slope,
            fit.r_squared
        ),
    })
}

/// `regret / (d^{1/3} T^{2/3} ln(dT))` stays within 25% of its mean over the sweep.
pub fn check_envelope(table: &SweepTable, dim: usize) -> CheckOutcome {
    let ratios = table.envelope_ratios(dim);
    let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = ((hi / mean) - 1.0).max(1.0 - lo / mean);
    CheckOutcome {
        criterion: 2,
        name: "regret envelope",
        passed: mean > 0.0 && spread <= 0.25,
        detail: format!("ratio range [{lo:.4}, {hi:.4}], mean {mean:.4}, max deviation {:.1}%", 100.0 * spread),
    }
}

/// Criteria 3 to 9; the sweep-based criteria 1 and 2 are added when `sweep` is given.
pub fn run_property_suite(sweep: Option<(u32, u32, usize)>) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    if let Some((k_min, k_max, reps)) = sweep {
        let table = slope_sweep(k_min, k_max, reps, 2024)?;
        out.push(check_slope(&table)?);
        out.push(check_envelope(&table, 2));
    }
    out.push(check_realizability(200, 11)?);
    out.push(check_cdf_counts()?);
    out.push(check_sandwich(100, 12)?);
    out.push(check_bump_invariants(13)?);
    out.push(check_exp4_sanity(100_000, 20)?);
    out.push(check_lv_trend(20)?);
    out.push(check_determinism(2000, 14)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_cdf_is_a_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let f = PiecewiseLinearCdf::random(&mut rng);
            let mut prev = 0.0;
            for j in 0..=400 {
                let v = -1.0 + j as f64 * 0.005;
                let p = f.cdf(v);
                assert!((0.0..=1.0).contains(&p) && p >= prev - 1e-15);
                prev = p;
            }
            assert_eq!(f.cdf(1.0), 1.0);
        }
    }

    #[test]
    fn cheap_checks_pass() {
        assert!(check_cdf_counts().unwrap().passed);
        assert!(check_sandwich(20, 1).unwrap().passed);
        assert!(check_realizability(30, 2).unwrap().passed);
    }
}
