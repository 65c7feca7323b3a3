//! Run results and their CSV / JSON forms.

use serde::{Deserialize, Serialize};

use super::config::{RegretNotion, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub price: f64,
    pub sold: bool,
    pub reward: f64,
    pub benchmark: f64,
    pub cum_regret: f64,
}

/// Settings that shaped a run, echoed next to its results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub delta: f64,
    pub delta_raw: f64,
    pub gamma: f64,
    pub gamma_raw: f64,
    pub num_policies: usize,
    pub num_actions: usize,
    pub explore_rate: f64,
    pub regret_notion: RegretNotion,
    /// How contexts and hidden parameters were chosen where the model leaves it open.
    pub context_distribution: String,
    pub hidden_parameter: Option<Vec<f64>>,
    /// Step of the hindsight oracle grid and its resolution bound, when computed.
    pub oracle_delta: Option<f64>,
    pub oracle_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    pub config: RunConfig,
    pub metadata: RunMetadata,
    pub rounds: Vec<RoundRecord>,
    /// Regret under `metadata.regret_notion`.
    pub final_regret: f64,
    /// Sum of optimal minus posted expected revenue.
    pub expected_regret: f64,
    pub empirical_exante_regret: Option<f64>,
    pub ex_post_regret: Option<f64>,
    pub total_reward: f64,
    pub wall_ms: f64,
}

pub const ROUND_CSV_HEADER: &str = "t,price,sold,reward,benchmark,cum_regret";
pub const SWEEP_CSV_HEADER: &str = "k,T,rep,final_regret,wall_ms";

/// Formats `x` with 12 significant digits the way C's `%.12g` does.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

impl RegretRecord {
    /// Per-round CSV; identical configs give identical bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(48 * (self.rounds.len() + 1));
        out.push_str(ROUND_CSV_HEADER);
        out.push('\n');
        for r in &self.rounds {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.t,
                format_sig12(r.price),
                u8::from(r.sold),
                format_sig12(r.reward),
                format_sig12(r.benchmark),
                format_sig12(r.cum_regret)
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize")
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "T = {}, policies = {}, actions = {}, gamma = {}, delta = {}, final regret ({:?}) = {}, expected regret = {}",
            self.rounds.len(),
            self.metadata.num_policies,
            self.metadata.num_actions,
            format_sig12(self.metadata.gamma),
            format_sig12(self.metadata.delta),
            self.metadata.regret_notion,
            format_sig12(self.final_regret),
            format_sig12(self.expected_regret),
        );
        if let Some(r) = self.ex_post_regret {
            s.push_str(&format!(", ex-post regret = {}", format_sig12(r)));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_matches_printf() {
        let cases = [
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (123456.789, "123456.789"),
            (1e-5, "1e-05"),
            (1.5e-4, "0.00015"),
            (123456789012345.0, "1.23456789012e+14"),
            (-0.05, "-0.05"),
            (100.0, "100"),
            (999999999999.9, "1e+12"),
            (0.0, "0"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig12(x), want, "{x}");
        }
    }
}
