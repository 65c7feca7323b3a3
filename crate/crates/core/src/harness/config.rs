//! Run configuration, automatic grid settings and the flat `key = value` file format.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::environments::{BumpShape, NoiseModel};
use crate::error::{PricingError, Result};
use crate::grid::{snap_gamma, GridSpec};

/// Policies beyond this many make the D2-EXP4 runner refuse unless overridden.
pub const DEFAULT_MAX_POLICIES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    LinearExp4,
    D2Exp4,
}

/// Which regret the `cum_regret` column and `final_regret` report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegretNotion {
    /// Realized comparator reward minus realized reward, same valuation draw.
    EmpiricalExAnte,
    /// Best fixed linear policy in hindsight on the realized valuations.
    ExPost,
    /// Per-round optimal expected revenue minus the posted price's expected revenue.
    Expected,
}

impl RegretNotion {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "empirical" | "empirical-ex-ante" => Ok(Self::EmpiricalExAnte),
            "ex-post" => Ok(Self::ExPost),
            "expected" | "ex-ante" => Ok(Self::Expected),
            _ => Err(PricingError::Parse(format!("unknown regret notion '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EnvironmentSpec {
    /// Gaussian noise with `u_t = J^{-1}(x_t . beta*)`, contexts on the sphere.
    GaussianGreedy { sigma: f64, beta_star: Option<Vec<f64>> },
    /// `y = x . theta* + N` with bounded noise; one-hot or sphere contexts.
    LinearValuation { theta_star: Option<Vec<f64>>, noise: NoiseModel, onehot: bool },
    /// Nested bump instances, one per coordinate, one-hot contexts.
    Bump { depth: usize, shape: BumpShape },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub environment: EnvironmentSpec,
    pub horizon: usize,
    pub dim: usize,
    pub bound: u32,
    pub seed: u64,
    pub reps: usize,
    /// Overrides for the automatic grid steps.
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub max_policies: usize,
    /// Also compute the hindsight regret against the best fixed linear policy.
    pub ex_post: bool,
    /// Overrides the default regret notion for the environment.
    pub regret: Option<RegretNotion>,
}

/// Grid settings after applying overrides and snapping, with the raw values echoed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedGrid {
    pub spec: GridSpec,
    pub delta_raw: f64,
    pub gamma_raw: f64,
}

/// `beta* = (0.6, 0.8)` for `d = 2`, the unit diagonal otherwise.
pub fn default_beta_star(dim: usize) -> Vec<f64> {
    if dim == 2 {
        vec![0.6, 0.8]
    } else {
        vec![1.0 / (dim as f64).sqrt(); dim]
    }
}

/// `theta* = 0.5 / sqrt(d)` in every coordinate.
pub fn default_theta_star(dim: usize) -> Vec<f64> {
    vec![0.5 / (dim as f64).sqrt(); dim]
}

impl RunConfig {
    /// The experiment setting: Linear-EXP4 on the Gaussian greedy environment, `d = 2`, `B = 1`.
    pub fn lp_default() -> Self {
        Self {
            algorithm: Algorithm::LinearExp4,
            environment: EnvironmentSpec::GaussianGreedy { sigma: 0.25, beta_star: None },
            horizon: 1024,
            dim: 2,
            bound: 1,
            seed: 0,
            reps: 1,
            delta: None,
            gamma: None,
            max_policies: DEFAULT_MAX_POLICIES,
            ex_post: false,
            regret: None,
        }
    }

    /// D2-EXP4 on a uniform-noise linear-valuation environment with the toy grid `delta = 1/4`, `gamma = 1/2`.
    pub fn lv_default() -> Self {
        Self {
            algorithm: Algorithm::D2Exp4,
            environment: EnvironmentSpec::LinearValuation { theta_star: None, noise: NoiseModel::Uniform, onehot: true },
            horizon: 5000,
            dim: 1,
            bound: 1,
            seed: 0,
            reps: 1,
            delta: Some(0.25),
            gamma: Some(0.5),
            max_policies: DEFAULT_MAX_POLICIES,
            ex_post: false,
            regret: None,
        }
    }

    /// Linear-EXP4 against a depth-3 bump instance.
    pub fn bump_default() -> Self {
        Self {
            algorithm: Algorithm::LinearExp4,
            environment: EnvironmentSpec::Bump { depth: 3, shape: BumpShape::Continuous },
            horizon: 4096,
            dim: 1,
            bound: 1,
            seed: 0,
            reps: 1,
            delta: None,
            gamma: None,
            max_policies: DEFAULT_MAX_POLICIES,
            ex_post: false,
            regret: None,
        }
    }

    /// Regret notion used when none is requested.
    pub fn regret_notion(&self) -> RegretNotion {
        self.regret.unwrap_or(match (&self.algorithm, &self.environment) {
            (Algorithm::LinearExp4, EnvironmentSpec::GaussianGreedy { .. }) => RegretNotion::EmpiricalExAnte,
            (Algorithm::LinearExp4, EnvironmentSpec::LinearValuation { .. }) => RegretNotion::ExPost,
            _ => RegretNotion::Expected,
        })
    }

    /// Grid steps: rate-optimal powers of T and d for the algorithm, explicit overrides on top,
    /// `gamma` snapped to `1/n` last. In automatic D2-EXP4 mode `delta` is tied to
    /// the snapped `gamma` as `gamma / sqrt(d)` so the markdown still covers the
    /// parameter rounding.
    pub fn resolve_grid(&self) -> Result<ResolvedGrid> {
        if self.horizon == 0 || self.dim == 0 || self.bound == 0 {
            return Err(PricingError::invalid("T, d and B must all be positive"));
        }
        let (t, d) = (self.horizon as f64, self.dim as f64);
        let (delta_auto, gamma_auto) = match self.algorithm {
            Algorithm::LinearExp4 => (t.powf(-1.0 / 3.0) * d.powf(-1.0 / 6.0), t.powf(-1.0 / 3.0) * d.powf(1.0 / 3.0)),
            Algorithm::D2Exp4 => (t.powf(-0.25) * d.powf(-0.5), t.powf(-0.25)),
        };
        let gamma_raw = self.gamma.unwrap_or(gamma_auto).min(1.0);
        let gamma = snap_gamma(gamma_raw)?;
        let delta_raw = self.delta.unwrap_or(delta_auto).min(1.0);
        let delta = match (self.algorithm, self.delta) {
            (Algorithm::D2Exp4, None) => delta_raw.min(gamma / d.sqrt()),
            _ => delta_raw,
        };
        Ok(ResolvedGrid { spec: GridSpec::new(delta, gamma, self.bound, self.dim, self.horizon)?, delta_raw, gamma_raw })
    }

    /// Applies one `key = value` setting. Keys are the CLI flag names.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| v.parse::<f64>().map_err(|e| PricingError::Parse(format!("{key}: {e}")));
        let int = |v: &str| v.parse::<u64>().map_err(|e| PricingError::Parse(format!("{key}: {e}")));
        match key {
            "T" => self.horizon = int(value)? as usize,
            "d" => self.dim = int(value)? as usize,
            "B" => self.bound = int(value)? as u32,
            "seed" => self.seed = int(value)?,
            "reps" => self.reps = int(value)? as usize,
            "delta" => self.delta = Some(num(value)?),
            "gamma" => self.gamma = Some(num(value)?),
            "max-policies" => self.max_policies = int(value)? as usize,
            "ex-post" => self.ex_post = parse_bool(key, value)?,
            "regret" => self.regret = Some(RegretNotion::parse(value)?),
            "sigma" => {
                let s = num(value)?;
                match &mut self.environment {
                    EnvironmentSpec::GaussianGreedy { sigma, .. } => *sigma = s,
                    EnvironmentSpec::LinearValuation { noise: NoiseModel::ClippedGaussian { sigma }, .. } => *sigma = s,
                    _ => return Err(PricingError::invalid("sigma does not apply to this environment")),
                }
            }
            "depth" => match &mut self.environment {
                EnvironmentSpec::Bump { depth, .. } => *depth = int(value)? as usize,
                _ => return Err(PricingError::invalid("depth only applies to the bump environment")),
            },
            "shape" => match &mut self.environment {
                EnvironmentSpec::Bump { shape, .. } => *shape = BumpShape::parse(value)?,
                _ => return Err(PricingError::invalid("shape only applies to the bump environment")),
            },
            "beta" => match &mut self.environment {
                EnvironmentSpec::GaussianGreedy { beta_star, .. } => *beta_star = Some(parse_vector(key, value)?),
                _ => return Err(PricingError::invalid("beta only applies to the Gaussian environment")),
            },
            "theta" => match &mut self.environment {
                EnvironmentSpec::LinearValuation { theta_star, .. } => *theta_star = Some(parse_vector(key, value)?),
                _ => return Err(PricingError::invalid("theta only applies to the linear-valuation environment")),
            },
            "noise" => match &mut self.environment {
                EnvironmentSpec::LinearValuation { noise, .. } => *noise = parse_noise(value)?,
                _ => return Err(PricingError::invalid("noise only applies to the linear-valuation environment")),
            },
            "contexts" => match &mut self.environment {
                EnvironmentSpec::LinearValuation { onehot, .. } => {
                    *onehot = match value {
                        "onehot" => true,
                        "sphere" => false,
                        _ => return Err(PricingError::Parse(format!("unknown context source '{value}'"))),
                    }
                }
                _ => return Err(PricingError::invalid("contexts only applies to the linear-valuation environment")),
            },
            // output options are consumed by the command line front end
            "out" | "format" | "k-min" | "k-max" => {}
            _ => return Err(PricingError::Parse(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(PricingError::Parse(format!("{key}: expected a boolean, got '{value}'"))),
    }
}

/// Comma-separated reals.
pub fn parse_vector(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| PricingError::Parse(format!("{key}: {e}"))))
        .collect()
}

/// `uniform`, `point[:at]`, `clipped-gaussian[:sigma]`.
pub fn parse_noise(value: &str) -> Result<NoiseModel> {
    let (name, arg) = match value.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (value, None),
    };
    let arg = |default: f64| -> Result<f64> {
        arg.map_or(Ok(default), |a| a.parse::<f64>().map_err(|e| PricingError::Parse(format!("noise: {e}"))))
    };
    let noise = match name {
        "uniform" => NoiseModel::Uniform,
        "point" => NoiseModel::PointMass { at: arg(0.0)? },
        "clipped-gaussian" => NoiseModel::ClippedGaussian { sigma: arg(0.25)? },
        _ => return Err(PricingError::Parse(format!("unknown noise model '{value}'"))),
    };
    noise.validate()?;
    Ok(noise)
}

/// Parses flat `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| PricingError::Parse(format!("line {}: expected 'key = value'", n + 1)))?;
        let key = k.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(PricingError::Parse(format!("line {}: empty key", n + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}
