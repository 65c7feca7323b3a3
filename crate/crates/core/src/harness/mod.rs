//! Runs, regret accounting, sweeps and property suites.

pub mod config;
pub mod fit;
pub mod record;
pub mod regret;
pub mod run;
pub mod seeds;
pub mod sweep;
pub mod verify;

pub use config::{Algorithm, EnvironmentSpec, RegretNotion, RunConfig};
pub use fit::{fit_loglog_slope, SlopeFit};
pub use record::{format_sig12, RegretRecord, RoundRecord};
pub use regret::{compute_empirical_exante_regret, compute_lv_regret};
pub use run::{run_d2_exp4, run_linear_exp4, run_once};
pub use sweep::{horizon_for_k, sweep_t, SweepTable};
