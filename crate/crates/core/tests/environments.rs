//! Sale frequencies against analytic survival values, across environments.

use pricing_core::environments::{
    greedy_price_j, BumpEnv, BumpInstance, BumpShape, GaussianGreedyEnv, SaleEnvironment,
};

fn frequency_matches(env: &mut dyn SaleEnvironment, price: f64, rounds: usize) {
    let (mut sold, mut expected) = (0usize, 0.0);
    for t in 0..rounds {
        env.next_context(t);
        expected += env.sale_probability(price);
        if env.post_price(t, price) {
            sold += 1;
        }
    }
    let n = rounds as f64;
    let p = expected / n;
    let sd = (p * (1.0 - p) / n).sqrt().max(1e-6);
    let rate = sold as f64 / n;
    assert!((rate - p).abs() <= 5.0 * sd, "rate {rate} vs {p} at price {price}");
}

#[test]
fn gaussian_env_sells_at_the_survival_rate() {
    for &price in &[0.3, 0.6, 0.9] {
        let mut env = GaussianGreedyEnv::new(vec![0.6, 0.8], 0.25, 1, 21).unwrap();
        frequency_matches(&mut env, price, 100_000);
    }
}

#[test]
fn bump_env_sells_at_the_survival_rate() {
    for &price in &[0.2, 0.5, 0.75] {
        let mut env = BumpEnv::new(2, 3, BumpShape::Continuous, 22).unwrap();
        frequency_matches(&mut env, price, 100_000);
    }
}

#[test]
fn gaussian_comparator_beats_nearby_prices() {
    let mut env = GaussianGreedyEnv::new(vec![0.6, 0.8], 0.25, 1, 3).unwrap();
    for t in 0..50 {
        env.next_context(t);
        let (p, best) = env.optimal_price(2.0);
        for dp in [-0.05, -0.01, 0.01, 0.05] {
            let q = p + dp;
            assert!(q * env.sale_probability(q) <= best + 1e-12);
        }
    }
    assert!(greedy_price_j(0.0, 0.25) > 0.18);
}

#[test]
fn bump_records_round_trip_for_every_shape() {
    for shape in [BumpShape::Literal, BumpShape::Continuous] {
        for seed in 0..5 {
            let inst = BumpInstance::sample(4, seed).unwrap().with_shape(shape);
            let back = BumpInstance::parse(&inst.serialize()).unwrap();
            assert_eq!(back, inst);
            assert!((back.peak_revenue() - back.revenue_d(back.peak_price())).abs() < 1e-9);
        }
    }
}
