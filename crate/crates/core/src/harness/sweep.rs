//! Repetition sweeps over the horizon grid `T_k = floor(2^{k/3})`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::fit::{fit_loglog_slope, SlopeFit};
use super::record::{format_sig12, SWEEP_CSV_HEADER};
use super::run::run_once;
use super::seeds::derive_seed;
use crate::error::{PricingError, Result};

/// `floor(2^{k/3})`, computed as the exact integer cube root of `2^k`.
pub fn horizon_for_k(k: u32) -> Result<u64> {
    if k > 100 {
        return Err(PricingError::invalid(format!("k = {k} is out of range")));
    }
    let target = 1u128 << k;
    let mut n = (target as f64).cbrt().floor() as u128;
    while (n + 1).pow(3) <= target {
        n += 1;
    }
    while n.pow(3) > target {
        n -= 1;
    }
    Ok(n as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: u32,
    pub horizon: u64,
    pub rep: usize,
    pub final_regret: f64,
    pub wall_ms: f64,
}

/// Mean and standard error of the final regret at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: u32,
    pub horizon: u64,
    pub mean: f64,
    pub std_error: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub points: Vec<SweepPoint>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.k,
                r.horizon,
                r.rep,
                format_sig12(r.final_regret),
                format_sig12(r.wall_ms)
            ));
        }
        out
    }

    pub fn fit(&self) -> Result<SlopeFit> {
        let pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.horizon as f64, p.mean)).collect();
        fit_loglog_slope(&pts)
    }

    /// `mean regret / (d^{1/3} T^{2/3} ln(dT))` per horizon.
    pub fn envelope_ratios(&self, dim: usize) -> Vec<f64> {
        let d = dim as f64;
        self.points
            .iter()
            .map(|p| {
                let t = p.horizon as f64;
                p.mean / (d.cbrt() * t.powf(2.0 / 3.0) * (d * t).ln())
            })
            .collect()
    }
}

fn run_rep(base: &RunConfig, k: u32, rep: usize) -> Result<SweepRow> {
    let horizon = horizon_for_k(k)?;
    let mut cfg = base.clone();
    cfg.horizon = horizon as usize;
    cfg.seed = derive_seed(base.seed, k as u64, rep as u64);
    let start = Instant::now();
    let rec = run_once(&cfg)?;
    Ok(SweepRow { k, horizon, rep, final_regret: rec.final_regret, wall_ms: start.elapsed().as_secs_f64() * 1e3 })
}

fn summarize(mut rows: Vec<SweepRow>) -> SweepTable {
    rows.sort_by_key(|r| (r.k, r.rep));
    let mut points = Vec::new();
    for chunk in rows.chunk_by(|a, b| a.k == b.k) {
        let n = chunk.len() as f64;
        let mean = chunk.iter().map(|r| r.final_regret).sum::<f64>() / n;
        let var = if chunk.len() > 1 {
            chunk.iter().map(|r| (r.final_regret - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        points.push(SweepPoint { k: chunk[0].k, horizon: chunk[0].horizon, mean, std_error: (var / n).sqrt(), reps: chunk.len() });
    }
    SweepTable { rows, points }
}

fn check(ks: &[u32], reps: usize) -> Result<()> {
    if ks.is_empty() || reps == 0 {
        return Err(PricingError::invalid("sweep needs at least one k and one repetition"));
    }
    Ok(())
}

/// Runs `reps` independently seeded repetitions at every `T_k`, in parallel.
pub fn sweep_t(base: &RunConfig, ks: &[u32], reps: usize) -> Result<SweepTable> {
    check(ks, reps)?;
    let jobs: Vec<(u32, usize)> = ks.iter().flat_map(|&k| (0..reps).map(move |r| (k, r))).collect();
    let rows = jobs.par_iter().map(|&(k, rep)| run_rep(base, k, rep)).collect::<Result<Vec<_>>>()?;
    Ok(summarize(rows))
}

/// Same table as [`sweep_t`], computed on the calling thread.
pub fn sweep_t_serial(base: &RunConfig, ks: &[u32], reps: usize) -> Result<SweepTable> {
    check(ks, reps)?;
    let mut rows = Vec::new();
    for &k in ks {
        for rep in 0..reps {
            rows.push(run_rep(base, k, rep)?);
        }
    }
    Ok(summarize(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_grid() {
        assert_eq!(horizon_for_k(27).unwrap(), 512);
        assert_eq!(horizon_for_k(30).unwrap(), 1024);
        assert_eq!(horizon_for_k(28).unwrap(), 645);
        assert_eq!(horizon_for_k(48).unwrap(), 65536);
        for k in 0..64 {
            let n = horizon_for_k(k).unwrap() as u128;
            assert!(n.pow(3) <= 1u128 << k && (n + 1).pow(3) > 1u128 << k);
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let mut base = RunConfig::lp_default();
        base.seed = 3;
        let ks = [12, 13, 14];
        let par = sweep_t(&base, &ks, 3).unwrap();
        let ser = sweep_t_serial(&base, &ks, 3).unwrap();
        let strip = |t: &SweepTable| t.rows.iter().map(|r| (r.k, r.rep, r.final_regret.to_bits())).collect::<Vec<_>>();
        assert_eq!(strip(&par), strip(&ser));
        assert_eq!(par.points.len(), 3);
        assert_eq!(par.points[0].horizon, 16);
    }
}
