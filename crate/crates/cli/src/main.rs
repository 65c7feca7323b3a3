use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pricing_core::environments::BumpInstance;
use pricing_core::harness::config::{parse_config_text, RunConfig};
use pricing_core::harness::record::format_sig12;
use pricing_core::harness::sweep::sweep_t;
use pricing_core::harness::verify::run_property_suite;
use pricing_core::harness::{run_d2_exp4, run_linear_exp4, EnvironmentSpec};
use pricing_core::policy_space::{
    catalog_size, cdf_family_size, enumerate_parameter_grid, PolicyKind,
};
use pricing_core::{GridSpec, PricingError, Result};

#[derive(Parser)]
#[command(name = "pricing", version, about = "Feature-based dynamic pricing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Linear-EXP4 against the Gaussian greedy environment (or another with --env).
    RunLp {
        #[command(flatten)]
        common: Common,
        /// Environment: gaussian, lv or bump.
        #[arg(long, default_value = "gaussian")]
        env: String,
    },
    /// D2-EXP4 against a linear-valuation environment with bounded noise.
    RunLv {
        #[command(flatten)]
        common: Common,
    },
    /// Linear-EXP4 against nested bump hard instances.
    RunBump {
        #[command(flatten)]
        common: Common,
        /// Print each sampled instance record to stderr.
        #[arg(long)]
        print_instance: bool,
    },
    /// Repetition sweep over T_k = floor(2^(k/3)) with a log-log slope fit.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long = "k-min", default_value_t = 27)]
        k_min: u32,
        #[arg(long = "k-max", default_value_t = 42)]
        k_max: u32,
    },
    /// Sizes of the parameter grid, CDF family and policy catalogs.
    Enumerate {
        #[command(flatten)]
        common: Common,
        /// List the parameter grid vectors too.
        #[arg(long)]
        list: bool,
    },
    /// Runs the property suites and prints one line per criterion.
    Verify {
        /// Include the slope and envelope sweep (k = 27..42, 10 repetitions).
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value_t = 10)]
        reps: usize,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct Common {
    /// Horizon (number of rounds).
    #[arg(long = "T")]
    horizon: Option<usize>,
    /// Context dimension.
    #[arg(long = "d")]
    dim: Option<usize>,
    /// Bound on context norms.
    #[arg(long = "B")]
    bound: Option<u32>,
    /// Base seed for the environment and agent streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Independent repetitions.
    #[arg(long)]
    reps: Option<usize>,
    /// Parameter grid step; the regret-optimal rate in T and d when omitted.
    #[arg(long)]
    delta: Option<f64>,
    /// Price grid step, snapped to 1/n; the regret-optimal rate in T and d when omitted.
    #[arg(long)]
    gamma: Option<f64>,
    /// Noise scale of the Gaussian or clipped-Gaussian environment.
    #[arg(long)]
    sigma: Option<f64>,
    /// Bump chain depth K (1..=5).
    #[arg(long)]
    depth: Option<usize>,
    /// Bump shape: continuous or literal.
    #[arg(long)]
    shape: Option<String>,
    /// Target linear policy for the Gaussian environment, comma separated.
    #[arg(long)]
    beta: Option<String>,
    /// True parameter for the linear-valuation environment, comma separated.
    #[arg(long)]
    theta: Option<String>,
    /// Noise for the linear-valuation environment: uniform, point[:at], clipped-gaussian[:sigma].
    #[arg(long)]
    noise: Option<String>,
    /// Context source for the linear-valuation environment: onehot or sphere.
    #[arg(long)]
    contexts: Option<String>,
    /// Regret notion: empirical, ex-post or expected.
    #[arg(long)]
    regret: Option<String>,
    /// Also compute the hindsight best-fixed-policy regret.
    #[arg(long = "ex-post")]
    ex_post: bool,
    /// Largest D2-EXP4 policy set to accept; larger ones are refused.
    #[arg(long = "max-policies")]
    max_policies: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Flat `key = value` file; command line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

struct Output {
    path: Option<PathBuf>,
    format: Format,
}

impl Common {
    fn flags(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        put("T", self.horizon.map(|v| v.to_string()));
        put("d", self.dim.map(|v| v.to_string()));
        put("B", self.bound.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("reps", self.reps.map(|v| v.to_string()));
        put("delta", self.delta.map(|v| v.to_string()));
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("sigma", self.sigma.map(|v| v.to_string()));
        put("depth", self.depth.map(|v| v.to_string()));
        put("shape", self.shape.clone());
        put("beta", self.beta.clone());
        put("theta", self.theta.clone());
        put("noise", self.noise.clone());
        put("contexts", self.contexts.clone());
        put("regret", self.regret.clone());
        put("max-policies", self.max_policies.map(|v| v.to_string()));
        if self.ex_post {
            put("ex-post", Some("true".into()));
        }
        out
    }

    /// Preset, then the config file, then explicit flags.
    fn resolve(&self, mut cfg: RunConfig) -> Result<(RunConfig, Output)> {
        let mut file_values = Default::default();
        if let Some(path) = &self.config {
            file_values = parse_config_text(&fs::read_to_string(path)?)?;
        }
        let file_values: std::collections::BTreeMap<String, String> = file_values;
        for (k, v) in &file_values {
            cfg.apply(k, v)?;
        }
        for (k, v) in self.flags() {
            cfg.apply(k, &v)?;
        }
        let format = match self.format {
            Some(f) => f,
            None => match file_values.get("format").map(String::as_str) {
                Some("json") => Format::Json,
                Some("csv") | None => Format::Csv,
                Some(other) => return Err(PricingError::Parse(format!("unknown format '{other}'"))),
            },
        };
        let path = self.out.clone().or_else(|| file_values.get("out").map(PathBuf::from));
        Ok((cfg, Output { path, format }))
    }
}

fn emit(out: &Output, csv: String, json: String) -> Result<()> {
    let text = if out.format == Format::Json { json } else { csv };
    match &out.path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_single(cfg: RunConfig, out: Output, d2: bool) -> Result<()> {
    let mut records = Vec::new();
    for rep in 0..cfg.reps.max(1) {
        let mut c = cfg.clone();
        c.seed = cfg.seed.wrapping_add(rep as u64);
        let rec = if d2 { run_d2_exp4(&c)? } else { run_linear_exp4(&c)? };
        eprintln!("rep {rep}: {}", rec.summary());
        records.push(rec);
    }
    if records.len() == 1 {
        let rec = &records[0];
        emit(&out, rec.to_csv(), rec.to_json())
    } else {
        let mut csv = String::new();
        for (i, rec) in records.iter().enumerate() {
            let body = rec.to_csv();
            if i == 0 {
                csv.push_str(&body);
            } else {
                csv.push_str(body.split_once('\n').map_or("", |(_, rest)| rest));
            }
        }
        let json = serde_json::to_string_pretty(&records).expect("records serialize");
        emit(&out, csv, json)
    }
}

fn enumerate(common: &Common, list: bool) -> Result<()> {
    let (cfg, _) = common.resolve(RunConfig::lp_default())?;
    let delta = cfg.delta.unwrap_or(0.25);
    let gamma = cfg.gamma.unwrap_or(0.5);
    let grid = enumerate_parameter_grid(delta, cfg.dim)?;
    println!("parameter grid (delta = {delta}, d = {}): {} vectors", cfg.dim, grid.len());
    if list {
        for v in grid.vectors() {
            let parts: Vec<String> = v.iter().map(|&c| format_sig12(c)).collect();
            println!("  ({})", parts.join(", "));
        }
    }
    let spec = GridSpec::new(delta, gamma, cfg.bound, cfg.dim, cfg.horizon)?;
    match spec.steps_per_unit() {
        Some(n) => match cdf_family_size(n) {
            Some(s) => println!("CDF family (gamma = 1/{n}): {s} members"),
            None => println!("CDF family (gamma = 1/{n}): beyond u128"),
        },
        None => println!("CDF family: gamma = {gamma} is not of the form 1/n"),
    }
    println!("linear-policy catalog: {} policies", format_sig12(catalog_size(PolicyKind::LinearPolicy, &spec)?));
    if spec.steps_per_unit().is_some() {
        println!(
            "noisy-valuation catalog: {} policies",
            format_sig12(catalog_size(PolicyKind::NoisyValuation, &spec)?)
        );
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::RunLp { common, env } => {
            let mut preset = RunConfig::lp_default();
            match env.as_str() {
                "gaussian" => {}
                "lv" => preset.environment = RunConfig::lv_default().environment,
                "bump" => preset.environment = RunConfig::bump_default().environment,
                other => return Err(PricingError::Parse(format!("unknown environment '{other}'"))),
            }
            if env != "gaussian" {
                preset.dim = 1;
            }
            let (cfg, out) = common.resolve(preset)?;
            run_single(cfg, out, false)?;
        }
        Command::RunLv { common } => {
            let (cfg, out) = common.resolve(RunConfig::lv_default())?;
            run_single(cfg, out, true)?;
        }
        Command::RunBump { common, print_instance } => {
            let (cfg, out) = common.resolve(RunConfig::bump_default())?;
            if print_instance {
                if let EnvironmentSpec::Bump { depth, shape } = cfg.environment {
                    let env_seed = pricing_core::harness::seeds::derive_seed(cfg.seed, 1, 0);
                    let env = pricing_core::environments::BumpEnv::new(cfg.dim, depth, shape, env_seed)?;
                    for inst in &env.instances {
                        eprint!("{}", inst.serialize());
                        let check = BumpInstance::parse(&inst.serialize())?;
                        debug_assert_eq!(&check, inst);
                    }
                }
            }
            run_single(cfg, out, false)?;
        }
        Command::Sweep { common, k_min, k_max } => {
            let mut preset = RunConfig::lp_default();
            preset.reps = 10;
            let (cfg, out) = common.resolve(preset)?;
            if k_min > k_max {
                return Err(PricingError::InvalidArgument("k-min exceeds k-max".into()));
            }
            let ks: Vec<u32> = (k_min..=k_max).collect();
            let table = sweep_t(&cfg, &ks, cfg.reps)?;
            for p in &table.points {
                eprintln!("k = {}, T = {}, mean regret {} +- {}", p.k, p.horizon, format_sig12(p.mean), format_sig12(p.std_error));
            }
            match table.fit() {
                Ok(fit) => eprintln!(
                    "log-log slope {:.4}, intercept {:.4}, r^2 {:.4}, excluded {:?}",
                    fit.slope, fit.intercept, fit.r_squared, fit.excluded
                ),
                Err(e) => eprintln!("no slope fit: {e}"),
            }
            let json = serde_json::to_string_pretty(&table).expect("tables serialize");
            emit(&out, table.to_csv(), json)?;
        }
        Command::Enumerate { common, list } => enumerate(&common, list)?,
        Command::Verify { sweep, reps } => {
            let outcomes = run_property_suite(sweep.then_some((27, 42, reps)))?;
            for o in &outcomes {
                println!("{o}");
            }
            return Ok(outcomes.iter().all(|o| o.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
