//! EXP-4: exponential weights over expert advice with inverse-propensity-scored
//! reward estimates and uniform exploration.
//!
//! Advice is deterministic, so each policy recommends exactly one action per
//! round. Rewards are divided by `reward_scale` to land in `[0, 1]` before the
//! update.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PricingError, Result};

/// Weights are renormalized to mean 1 once the largest exceeds this.
const RENORMALIZE_ABOVE: f64 = 1e100;

#[derive(Debug, Clone)]
pub struct Exp4Agent {
    num_actions: usize,
    weights: Vec<f64>,
    explore_rate: f64,
    reward_scale: f64,
    rng: ChaCha8Rng,
}

/// `min(1, sqrt(K ln N / ((e - 1) T)))`, floored at `1 / (K T)`.
pub fn default_explore_rate(num_policies: usize, num_actions: usize, horizon: usize) -> f64 {
    let (n, k, t) = (num_policies as f64, num_actions as f64, horizon as f64);
    let rate = (k * n.ln() / ((std::f64::consts::E - 1.0) * t)).sqrt().min(1.0);
    rate.max(1.0 / (k * t))
}

impl Exp4Agent {
    pub fn new(
        num_policies: usize,
        num_actions: usize,
        horizon: usize,
        reward_scale: f64,
        seed: u64,
    ) -> Result<Self> {
        if num_policies == 0 || num_actions == 0 || horizon == 0 {
            return Err(PricingError::invalid("EXP-4 needs at least one policy, one action and one round"));
        }
        if !(reward_scale > 0.0 && reward_scale.is_finite()) {
            return Err(PricingError::invalid(format!("reward scale must be positive, got {reward_scale}")));
        }
        Ok(Self {
            num_actions,
            weights: vec![1.0; num_policies],
            explore_rate: default_explore_rate(num_policies, num_actions, horizon),
            reward_scale,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Overrides the exploration rate; it must lie in `(0, 1]`.
    pub fn with_explore_rate(mut self, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(PricingError::invalid(format!("exploration rate must lie in (0, 1], got {rate}")));
        }
        self.explore_rate = rate;
        Ok(self)
    }

    pub fn num_policies(&self) -> usize {
        self.weights.len()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn explore_rate(&self) -> f64 {
        self.explore_rate
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Share of total weight held by `policy`.
    pub fn weight_share(&self, policy: usize) -> f64 {
        self.weights[policy] / self.weights.iter().sum::<f64>()
    }

    fn check_advice(&self, advice: &[usize]) -> Result<()> {
        if advice.len() != self.weights.len() {
            return Err(PricingError::invalid(format!(
                "advice has {} entries, expected {}",
                advice.len(),
                self.weights.len()
            )));
        }
        if let Some(&a) = advice.iter().find(|&&a| a >= self.num_actions) {
            return Err(PricingError::invalid(format!("advised action {a} is out of range")));
        }
        Ok(())
    }

    /// Mixes the policies' recommendations by weight and adds uniform exploration.
    pub fn action_distribution(&self, advice: &[usize]) -> Result<Vec<f64>> {
        self.check_advice(advice)?;
        let mut mass = vec![0.0; self.num_actions];
        let mut total = 0.0;
        for (&a, &w) in advice.iter().zip(&self.weights) {
            mass[a] += w;
            total += w;
        }
        let k = self.num_actions as f64;
        let floor = self.explore_rate / k;
        Ok(mass
            .into_iter()
            .map(|m| (1.0 - self.explore_rate) * m / total + floor)
            .collect())
    }

    /// Draws an action index from `probs`.
    pub fn sample_action(&mut self, probs: &[f64]) -> Result<usize> {
        let sum: f64 = probs.iter().sum();
        if probs.is_empty() || (sum - 1.0).abs() > 1e-9 || probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(PricingError::invalid(format!("action probabilities must be normalized, sum = {sum}")));
        }
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (j, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last_positive = j;
                if u < acc {
                    return Ok(j);
                }
            }
        }
        Ok(last_positive)
    }

    /// Multiplicative update with the IPS estimate `(reward / scale) / p_chosen`
    /// credited to every policy that recommended the chosen action.
    pub fn update(&mut self, advice: &[usize], chosen: usize, p_chosen: f64, reward: f64) -> Result<()> {
        self.check_advice(advice)?;
        if chosen >= self.num_actions {
            return Err(PricingError::invalid(format!("chosen action {chosen} is out of range")));
        }
        if !(reward >= 0.0 && reward <= self.reward_scale * (1.0 + 1e-12)) {
            return Err(PricingError::invalid(format!(
                "reward {reward} is outside [0, {}]",
                self.reward_scale
            )));
        }
        if !(p_chosen > 0.0 && p_chosen <= 1.0 + 1e-12) {
            return Err(PricingError::invalid(format!("invalid propensity {p_chosen}")));
        }
        if reward == 0.0 {
            return Ok(());
        }
        let estimate = (reward / self.reward_scale) / p_chosen;
        let factor = (self.explore_rate / self.num_actions as f64 * estimate).exp();
        let mut max = 0.0f64;
        for (w, &a) in self.weights.iter_mut().zip(advice) {
            if a == chosen {
                *w *= factor;
            }
            max = max.max(*w);
        }
        if max > RENORMALIZE_ABOVE {
            let mean = self.weights.iter().sum::<f64>() / self.weights.len() as f64;
            for w in &mut self.weights {
                *w = (*w / mean).max(f64::MIN_POSITIVE);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn agent(n: usize, k: usize) -> Exp4Agent {
        Exp4Agent::new(n, k, 1000, 1.0, 1).unwrap()
    }

    #[test]
    fn explore_rate_formula() {
        let a = Exp4Agent::new(100, 10, 10_000, 1.0, 0).unwrap();
        let expected = (10.0 * 100f64.ln() / (1.718281828459045 * 1e4)).sqrt();
        assert_abs_diff_eq!(a.explore_rate(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(a.explore_rate(), 0.0518, epsilon = 1e-4);
    }

    #[test]
    fn single_policy_gets_floor_rate() {
        let a = Exp4Agent::new(1, 4, 50, 1.0, 0).unwrap();
        assert_abs_diff_eq!(a.explore_rate(), 1.0 / 200.0, epsilon = 1e-15);
    }

    #[test]
    fn single_action_always_played() {
        let mut a = Exp4Agent::new(3, 1, 100, 1.0, 0).unwrap();
        for _ in 0..50 {
            let p = a.action_distribution(&[0, 0, 0]).unwrap();
            assert_eq!(p, vec![1.0]);
            assert_eq!(a.sample_action(&p).unwrap(), 0);
        }
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(Exp4Agent::new(0, 2, 10, 1.0, 0).is_err());
        assert!(Exp4Agent::new(2, 0, 10, 1.0, 0).is_err());
        assert!(Exp4Agent::new(2, 2, 0, 1.0, 0).is_err());
    }

    #[test]
    fn distribution_examples() {
        let a = agent(2, 2).with_explore_rate(1e-300).unwrap();
        let p = a.action_distribution(&[0, 1]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);

        let mut b = agent(2, 2).with_explore_rate(1e-300).unwrap();
        b.weights = vec![3.0, 1.0];
        let p = b.action_distribution(&[0, 1]).unwrap();
        assert_abs_diff_eq!(p[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.25, epsilon = 1e-12);

        let mut c = agent(2, 2).with_explore_rate(0.2).unwrap();
        c.weights = vec![1.0, 3.0];
        let p = c.action_distribution(&[0, 1]).unwrap();
        assert_abs_diff_eq!(p[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.7, epsilon = 1e-12);

        assert!(c.action_distribution(&[0]).is_err());
        assert!(c.action_distribution(&[0, 2]).is_err());
    }

    #[test]
    fn sampling_point_masses() {
        let mut a = agent(1, 3);
        assert_eq!(a.sample_action(&[1.0, 0.0, 0.0]).unwrap(), 0);
        assert_eq!(a.sample_action(&[0.0, 1.0]).unwrap(), 1);
        assert!(a.sample_action(&[0.5, 0.4]).is_err());
    }

    #[test]
    fn sampling_frequency_concentrates() {
        let mut a = Exp4Agent::new(2, 2, 10, 1.0, 12345).unwrap();
        let draws = 1_000_000;
        let zeros = (0..draws).filter(|_| a.sample_action(&[0.5, 0.5]).unwrap() == 0).count();
        let freq = zeros as f64 / draws as f64;
        // sd = 0.0005, so the band is four standard deviations wide
        assert!((0.498..=0.502).contains(&freq), "frequency {freq}");
    }

    #[test]
    fn update_examples() {
        let mut a = agent(2, 2).with_explore_rate(0.1).unwrap();
        a.update(&[0, 1], 0, 0.5, 0.0).unwrap();
        assert_eq!(a.weights(), &[1.0, 1.0]);
        a.update(&[0, 1], 0, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(a.weights()[0], 0.1f64.exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(a.weights()[0], 1.10517, epsilon = 1e-5);
        assert_eq!(a.weights()[1], 1.0);
        assert!(a.update(&[0, 1], 0, 0.5, 1.5).is_err());
        assert!(a.update(&[0, 1], 0, 0.5, -0.1).is_err());
    }

    #[test]
    fn non_matching_policy_keeps_relative_weight() {
        let mut a = agent(3, 2).with_explore_rate(1.0).unwrap();
        for _ in 0..10_000 {
            a.update(&[0, 0, 1], 0, 0.01, 1.0).unwrap();
            assert!(a.weights().iter().all(|w| *w > 0.0 && w.is_finite()));
        }
        // renormalization happened, policy 2 keeps its (tiny but positive) weight
        assert!(a.weights()[0] <= RENORMALIZE_ABOVE);
        assert_eq!(a.weights()[0], a.weights()[1]);
        assert!(a.weights()[2] < a.weights()[0]);
        let p = a.action_distribution(&[0, 0, 1]).unwrap();
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(p.iter().all(|&q| q >= 0.5 - 1e-12));
    }

    #[test]
    fn identical_inputs_give_identical_actions() {
        let run = |seed| {
            let mut a = Exp4Agent::new(4, 3, 500, 1.0, seed).unwrap();
            let advice = [0, 1, 2, 1];
            (0..500)
                .map(|t| {
                    let p = a.action_distribution(&advice).unwrap();
                    let j = a.sample_action(&p).unwrap();
                    a.update(&advice, j, p[j], if (t + j) % 3 == 0 { 1.0 } else { 0.0 }).unwrap();
                    j
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }
}
