//! The online loop shared by Linear-EXP4 and D2-EXP4.
//!
//! Each round: observe the context, collect every policy's advice, let EXP-4
//! pick a price, post it, and feed the realized revenue back.

use std::time::Instant;

use super::config::{
    default_beta_star, default_theta_star, Algorithm, EnvironmentSpec, RegretNotion, ResolvedGrid, RunConfig,
};
use super::record::{RegretRecord, RoundRecord, RunMetadata};
use super::regret::{compute_empirical_exante_regret, RegretSeries};
use super::seeds::derive_seed;
use crate::environments::{
    best_fixed_beta, make_lv_env, BumpEnv, ContextSource, GaussianGreedyEnv, SaleEnvironment,
};
use crate::error::{PricingError, Result};
use crate::exp4::Exp4Agent;
use crate::grid::dot;
use crate::policy_space::{build_catalog_capped, catalog_size, enumerate_parameter_grid, PolicyCatalog, PolicyKind};

/// An environment instance with the description echoed into run metadata.
pub struct BuiltEnvironment {
    pub env: Box<dyn SaleEnvironment + Send>,
    pub context_distribution: String,
    pub hidden_parameter: Option<Vec<f64>>,
    /// Upper end of the price range for the per-round optimum.
    pub vmax: f64,
}

/// Instantiates the configured environment with its own seed.
pub fn build_environment(cfg: &RunConfig, seed: u64) -> Result<BuiltEnvironment> {
    let bound = cfg.bound as f64;
    Ok(match &cfg.environment {
        EnvironmentSpec::GaussianGreedy { sigma, beta_star } => {
            let beta = beta_star.clone().unwrap_or_else(|| default_beta_star(cfg.dim));
            if beta.len() != cfg.dim {
                return Err(PricingError::invalid("beta* dimension differs from d"));
            }
            BuiltEnvironment {
                env: Box::new(GaussianGreedyEnv::new(beta.clone(), *sigma, cfg.bound, seed)?),
                context_distribution: format!("uniform on the nonnegative part of the radius-{bound} sphere"),
                hidden_parameter: Some(beta),
                vmax: bound + 1.0,
            }
        }
        EnvironmentSpec::LinearValuation { theta_star, noise, onehot } => {
            let theta = theta_star.clone().unwrap_or_else(|| default_theta_star(cfg.dim));
            let (contexts, description) = if *onehot {
                (ContextSource::OneHot { dim: cfg.dim }, "uniformly random standard basis vectors".to_string())
            } else {
                (
                    ContextSource::Sphere { dim: cfg.dim, radius: bound },
                    format!("uniform on the nonnegative part of the radius-{bound} sphere"),
                )
            };
            BuiltEnvironment {
                env: Box::new(make_lv_env(theta.clone(), noise.clone(), contexts, cfg.bound, seed)?),
                context_distribution: description,
                hidden_parameter: Some(theta),
                vmax: bound + 1.0,
            }
        }
        EnvironmentSpec::Bump { depth, shape } => BuiltEnvironment {
            env: Box::new(BumpEnv::new(cfg.dim, *depth, *shape, seed)?),
            context_distribution: "uniformly random standard basis vectors".into(),
            hidden_parameter: None,
            vmax: 1.0,
        },
    })
}

/// Builds the catalog for the configured algorithm, enforcing the policy cap.
pub fn build_run_catalog(cfg: &RunConfig, grid: &ResolvedGrid) -> Result<PolicyCatalog> {
    let kind = match cfg.algorithm {
        Algorithm::LinearExp4 => PolicyKind::LinearPolicy,
        Algorithm::D2Exp4 => PolicyKind::NoisyValuation,
    };
    if kind == PolicyKind::NoisyValuation {
        let size = catalog_size(kind, &grid.spec)?;
        if size > cfg.max_policies as f64 {
            return Err(PricingError::Capacity {
                what: format!(
                    "D2-EXP4 policy set (T = {}, d = {}, delta = {}, gamma = {}); the class grows like 2^(T^(1/4)), raise --max-policies to run anyway",
                    cfg.horizon, cfg.dim, grid.spec.delta, grid.spec.gamma
                ),
                size,
                cap: cfg.max_policies as f64,
            });
        }
    }
    build_catalog_capped(kind, &grid.spec, cfg.max_policies.max(1))
}

struct Trace {
    prices: Vec<f64>,
    sold: Vec<bool>,
    comparator: Vec<Option<f64>>,
    valuation: Vec<Option<f64>>,
    expected_regret: Vec<f64>,
    best_revenue: Vec<f64>,
    contexts: Vec<Vec<f64>>,
}

/// Runs one repetition of the configured algorithm with the configured seed.
pub fn run_once(cfg: &RunConfig) -> Result<RegretRecord> {
    let start = Instant::now();
    let grid = cfg.resolve_grid()?;
    let catalog = build_run_catalog(cfg, &grid)?;
    let built = build_environment(cfg, derive_seed(cfg.seed, 1, 0))?;
    if built.env.dim() != cfg.dim {
        return Err(PricingError::invalid("environment dimension differs from d"));
    }
    let BuiltEnvironment { mut env, context_distribution, hidden_parameter, vmax } = built;
    let reward_scale = catalog.action_price(catalog.num_actions() - 1).max(f64::MIN_POSITIVE);
    let mut agent = Exp4Agent::new(catalog.len(), catalog.num_actions(), cfg.horizon, reward_scale, derive_seed(cfg.seed, 2, 0))?;
    let notion = cfg.regret_notion();
    let keep_history = cfg.ex_post || notion == RegretNotion::ExPost;

    let t_max = cfg.horizon;
    let mut trace = Trace {
        prices: Vec::with_capacity(t_max),
        sold: Vec::with_capacity(t_max),
        comparator: Vec::with_capacity(t_max),
        valuation: Vec::with_capacity(t_max),
        expected_regret: Vec::with_capacity(t_max),
        best_revenue: Vec::with_capacity(t_max),
        contexts: Vec::new(),
    };
    let mut advice = Vec::with_capacity(catalog.len());
    for t in 0..t_max {
        let x = env.next_context(t);
        catalog.advice(&x, &mut advice)?;
        let probs = agent.action_distribution(&advice)?;
        let action = agent.sample_action(&probs)?;
        let price = catalog.action_price(action);
        let sold = env.post_price(t, price);
        let reward = if sold { price } else { 0.0 };
        agent.update(&advice, action, probs[action], reward)?;

        let (_, best) = env.optimal_price(vmax);
        trace.expected_regret.push(best - price * env.sale_probability(price));
        trace.best_revenue.push(best);
        trace.prices.push(price);
        trace.sold.push(sold);
        trace.comparator.push(env.comparator_price());
        trace.valuation.push(env.realized_valuation());
        if keep_history {
            trace.contexts.push(x);
        }
    }

    let realized: Vec<f64> = trace.prices.iter().zip(&trace.sold).map(|(&p, &s)| if s { p } else { 0.0 }).collect();
    let expected = RegretSeries::from_per_round(trace.expected_regret.clone());

    let empirical = match trace.comparator.iter().zip(&trace.valuation).map(|(c, y)| c.zip(*y)).collect::<Option<Vec<_>>>() {
        Some(pairs) if !pairs.is_empty() => {
            let (cmp, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            Some((compute_empirical_exante_regret(&trace.prices, &cmp, &ys)?, cmp, ys))
        }
        _ => None,
    };

    let mut oracle_delta = None;
    let mut oracle_gap = None;
    let ex_post = if keep_history {
        let ys = trace
            .valuation
            .iter()
            .map(|y| y.ok_or_else(|| PricingError::invalid("ex-post regret needs realized valuations")))
            .collect::<Result<Vec<f64>>>()?;
        let history: Vec<(Vec<f64>, f64)> = trace.contexts.iter().cloned().zip(ys.iter().copied()).collect();
        let step = grid.spec.delta / 4.0;
        let oracle_grid = enumerate_parameter_grid(step, cfg.dim)?;
        let fit = best_fixed_beta(&history, &oracle_grid, None)?;
        oracle_delta = Some(step);
        oracle_gap = Some(fit.resolution_gap);
        let per_round_bench: Vec<f64> = history
            .iter()
            .map(|(x, y)| {
                let p = dot(x, &fit.beta);
                if p <= *y {
                    p
                } else {
                    0.0
                }
            })
            .collect();
        Some((fit, per_round_bench))
    } else {
        None
    };

    // benchmark column and cumulative regret under the primary notion
    let (benchmark, series): (Vec<f64>, RegretSeries) = match notion {
        RegretNotion::EmpiricalExAnte => {
            let (series, cmp, ys) = empirical
                .clone()
                .ok_or_else(|| PricingError::invalid("empirical ex-ante regret needs a comparator policy"))?;
            let bench = cmp.iter().zip(&ys).map(|(&c, &y)| if c <= y { c } else { 0.0 }).collect();
            (bench, series)
        }
        RegretNotion::ExPost => {
            let (_, bench) = ex_post.as_ref().expect("history kept for ex-post regret");
            let per_round = bench.iter().zip(&realized).map(|(b, r)| b - r).collect();
            (bench.clone(), RegretSeries::from_per_round(per_round))
        }
        RegretNotion::Expected => (trace.best_revenue.clone(), expected.clone()),
    };

    let rounds = (0..t_max)
        .map(|t| RoundRecord {
            t: t + 1,
            price: trace.prices[t],
            sold: trace.sold[t],
            reward: realized[t],
            benchmark: benchmark[t],
            cum_regret: series.cumulative[t],
        })
        .collect();

    Ok(RegretRecord {
        config: cfg.clone(),
        metadata: RunMetadata {
            delta: grid.spec.delta,
            delta_raw: grid.delta_raw,
            gamma: grid.spec.gamma,
            gamma_raw: grid.gamma_raw,
            num_policies: catalog.len(),
            num_actions: catalog.num_actions(),
            explore_rate: agent.explore_rate(),
            regret_notion: notion,
            context_distribution,
            hidden_parameter,
            oracle_delta,
            oracle_gap,
        },
        rounds,
        final_regret: series.total(),
        expected_regret: expected.total(),
        empirical_exante_regret: empirical.map(|(s, _, _)| s.total()),
        ex_post_regret: ex_post.map(|(fit, _)| fit.total - realized.iter().sum::<f64>()),
        total_reward: realized.iter().sum(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Linear-EXP4 on the configured environment.
pub fn run_linear_exp4(cfg: &RunConfig) -> Result<RegretRecord> {
    if cfg.algorithm != Algorithm::LinearExp4 {
        return Err(PricingError::invalid("configuration is not for Linear-EXP4"));
    }
    run_once(cfg)
}

/// D2-EXP4 on the configured environment.
pub fn run_d2_exp4(cfg: &RunConfig) -> Result<RegretRecord> {
    if cfg.algorithm != Algorithm::D2Exp4 {
        return Err(PricingError::invalid("configuration is not for D2-EXP4"));
    }
    run_once(cfg)
}
