//! Discrete-event simulation of the dual-server system under ZW, F/P and
//! preemption-only operation.
//!
//! Each replication runs sequentially on its own ChaCha8 stream selected by
//! `(seed, replication index)`, so results do not depend on how replications
//! are scheduled across threads. The age process is recorded exactly as a
//! sequence of sawtooth cycles `(u_l, L_l)`; no time discretization is used.

mod engine;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use engine::{run_replication, Entry, Packet, RawReplication, Trace};

use crate::error::{invalid, Error, Result};
use crate::format::sig12;
use crate::fp::FpParams;
use crate::metrics::{interpolate, DistributionTable, GridSpec, Metric};
use crate::model::{close, ModelParams};
use crate::zw::ZwParams;

pub const MIN_HORIZON: u64 = 1000;

/// Freeze rates at or above this match the native preemption-only mode.
pub const PREEMPT_ONLY_MATCH_LAMBDA: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SimPolicy {
    Zw(ZwParams),
    Fp(FpParams),
    /// F/P with freezing removed: idle servers are fed immediately.
    FpPreemptOnly(ZwParams),
}

impl SimPolicy {
    pub fn rates(&self) -> (f64, f64) {
        match self {
            SimPolicy::Zw(p) | SimPolicy::FpPreemptOnly(p) => (p.mu1, p.mu2),
            SimPolicy::Fp(p) => (p.mu1, p.mu2),
        }
    }

    /// Whether an analytic model describes this simulated policy.
    pub fn matches(&self, model: &ModelParams) -> bool {
        let (a1, a2) = self.rates();
        let (b1, b2) = model.rates();
        let rates = close(a1, b1) && close(a2, b2);
        match (self, model) {
            (SimPolicy::Zw(_), ModelParams::Zw(_)) => rates,
            (SimPolicy::Fp(s), ModelParams::Fp(m)) => {
                rates && s.k == m.k && close(s.lambda, m.lambda)
            }
            (SimPolicy::FpPreemptOnly(_), ModelParams::Fp(m)) => {
                rates && m.k == 1 && m.lambda >= PREEMPT_ONLY_MATCH_LAMBDA
            }
            _ => false,
        }
    }
}

fn one() -> u32 {
    1
}

/// Simulation run description; also the JSON config file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(flatten)]
    pub policy: SimPolicy,
    /// Successful receptions (cycles) per replication, warmup included.
    pub horizon: u64,
    /// Cycles discarded at the start of each replication; 1% of horizon if unset.
    #[serde(default)]
    pub warmup: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: u32,
    /// Evaluation grid for the empirical AoI cdf; derived from the mean if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aoi_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paoi_grid: Option<Vec<f64>>,
}

impl SimConfig {
    pub fn new(policy: SimPolicy, horizon: u64, seed: u64, replications: u32) -> Self {
        Self {
            policy,
            horizon,
            warmup: None,
            seed,
            replications,
            aoi_grid: None,
            paoi_grid: None,
        }
    }

    pub fn effective_warmup(&self) -> u64 {
        self.warmup.unwrap_or(self.horizon / 100)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < MIN_HORIZON {
            return Err(invalid(
                "horizon",
                format!("must be at least {MIN_HORIZON}, got {}", self.horizon),
            ));
        }
        if self.effective_warmup() >= self.horizon {
            return Err(invalid(
                "warmup",
                format!(
                    "warmup {} must be smaller than horizon {}",
                    self.effective_warmup(),
                    self.horizon
                ),
            ));
        }
        if self.replications < 1 {
            return Err(invalid("replications", "need at least one replication"));
        }
        for (name, grid) in [("aoi_grid", &self.aoi_grid), ("paoi_grid", &self.paoi_grid)] {
            if let Some(g) = grid {
                if g.is_empty() || g[0] < 0.0 || g.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid(name, "grid must be nonempty, nonnegative and increasing"));
                }
            }
        }
        Ok(())
    }
}

/// Point estimate with its across-replication standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// `None` with a single replication.
    pub std_error: Option<f64>,
}

impl Estimate {
    /// `|value - target| <= z * std_error`; false without a standard error.
    pub fn within(&self, target: f64, z: f64) -> bool {
        self.std_error.is_some_and(|se| (self.value - target).abs() <= z * se)
    }
}

/// Empirical cdf sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub grid: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn at(&self, x: f64) -> f64 {
        interpolate(&self.grid, &self.cdf, x)
    }

    /// CSV with header `x,cdf`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "cdf"])?;
        for (x, c) in self.grid.iter().zip(&self.cdf) {
            w.write_record([sig12(*x), sig12(*c)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStats {
    pub mean_aoi: f64,
    pub mean_paoi: f64,
    pub cycles: u64,
    pub generated: u64,
    pub discarded: u64,
    pub preempted: u64,
    /// Packets entering the tagged chain at (1,1), (10,1), (6,1); F/P modes only.
    pub entries: [u64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub mean_aoi: Estimate,
    pub mean_paoi: Estimate,
    pub empirical_aoi_cdf: EmpiricalCdf,
    pub empirical_paoi_cdf: EmpiricalCdf,
    pub cycle_count: u64,
    pub seed: u64,
    pub generated: u64,
    pub discarded: u64,
    pub preempted: u64,
    pub entries: [u64; 3],
    pub per_replication: Vec<ReplicationStats>,
}

impl SimResult {
    pub fn empirical(&self, metric: Metric) -> &EmpiricalCdf {
        match metric {
            Metric::Aoi => &self.empirical_aoi_cdf,
            Metric::Paoi => &self.empirical_paoi_cdf,
        }
    }

    /// Fraction of generated packets discarded at the monitor.
    pub fn discard_fraction(&self) -> f64 {
        self.discarded as f64 / self.generated.max(1) as f64
    }
}

fn estimate(values: &[f64], pooled: f64) -> Estimate {
    let r = values.len();
    let std_error = (r >= 2).then(|| {
        let m = values.iter().sum::<f64>() / r as f64;
        let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (r - 1) as f64;
        (var / r as f64).sqrt()
    });
    Estimate {
        value: pooled,
        std_error,
    }
}

/// Per-grid-point accumulators of one replication: time spent with age
/// at most `x`, and the number of peaks at most `x`.
fn accumulate(raw: &RawReplication, aoi_grid: &[f64], paoi_grid: &[f64]) -> (Vec<f64>, Vec<u64>) {
    let mut starts = raw.starts.clone();
    let mut peaks: Vec<f64> = raw.starts.iter().zip(&raw.lengths).map(|(u, l)| u + l).collect();
    starts.sort_by(f64::total_cmp);
    peaks.sort_by(f64::total_cmp);
    let prefix = |v: &[f64]| {
        let mut acc = Vec::with_capacity(v.len() + 1);
        acc.push(0.0);
        let mut s = 0.0;
        for x in v {
            s += x;
            acc.push(s);
        }
        acc
    };
    let start_sums = prefix(&starts);
    let peak_sums = prefix(&peaks);
    // a cycle contributes clamp(x - u, 0, L) = [x - u]^+ - [x - (u + L)]^+
    let time_below = aoi_grid
        .iter()
        .map(|&x| {
            let a = starts.partition_point(|&u| u <= x);
            let b = peaks.partition_point(|&p| p <= x);
            (a as f64 * x - start_sums[a]) - (b as f64 * x - peak_sums[b])
        })
        .collect();
    let peaks_below = paoi_grid
        .iter()
        .map(|&x| peaks.partition_point(|&p| p <= x) as u64)
        .collect();
    (time_below, peaks_below)
}

fn monotone_unit(mut v: Vec<f64>) -> Vec<f64> {
    let mut running = 0.0_f64;
    for x in v.iter_mut() {
        running = running.max(x.clamp(0.0, 1.0));
        *x = running;
    }
    v
}

/// Runs every replication and aggregates them in index order.
pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let raws: Vec<RawReplication> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(cfg, rep, false))
        .collect();

    let total_area: f64 = raws.iter().map(|r| r.area).sum();
    let total_time: f64 = raws.iter().map(|r| r.duration).sum();
    let total_peaks: f64 = raws.iter().map(|r| r.peak_sum).sum();
    let cycle_count: u64 = raws.iter().map(|r| r.starts.len() as u64).sum();
    let mean_aoi = total_area / total_time;
    let mean_paoi = total_peaks / cycle_count as f64;

    let grid = GridSpec::default();
    let aoi_grid = cfg.aoi_grid.clone().unwrap_or_else(|| grid.grid(mean_aoi));
    let paoi_grid = cfg.paoi_grid.clone().unwrap_or_else(|| grid.grid(mean_paoi));
    let partials: Vec<(Vec<f64>, Vec<u64>)> = raws
        .par_iter()
        .map(|r| accumulate(r, &aoi_grid, &paoi_grid))
        .collect();
    let mut time_below = vec![0.0; aoi_grid.len()];
    let mut peaks_below = vec![0u64; paoi_grid.len()];
    for (t, p) in &partials {
        time_below.iter_mut().zip(t).for_each(|(a, b)| *a += b);
        peaks_below.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    let aoi_cdf = monotone_unit(time_below.into_iter().map(|t| t / total_time).collect());
    let paoi_cdf = peaks_below
        .into_iter()
        .map(|c| c as f64 / cycle_count as f64)
        .collect();

    let per_replication: Vec<ReplicationStats> = raws
        .iter()
        .map(|r| ReplicationStats {
            mean_aoi: r.area / r.duration,
            mean_paoi: r.peak_sum / r.starts.len() as f64,
            cycles: r.starts.len() as u64,
            generated: r.generated,
            discarded: r.discarded,
            preempted: r.preempted,
            entries: r.entries,
        })
        .collect();
    let aoi_reps: Vec<f64> = per_replication.iter().map(|r| r.mean_aoi).collect();
    let paoi_reps: Vec<f64> = per_replication.iter().map(|r| r.mean_paoi).collect();
    let mut entries = [0u64; 3];
    for r in &per_replication {
        for (e, x) in entries.iter_mut().zip(r.entries) {
            *e += x;
        }
    }

    Ok(SimResult {
        config: cfg.clone(),
        mean_aoi: estimate(&aoi_reps, mean_aoi),
        mean_paoi: estimate(&paoi_reps, mean_paoi),
        empirical_aoi_cdf: EmpiricalCdf {
            grid: aoi_grid,
            cdf: aoi_cdf,
        },
        empirical_paoi_cdf: EmpiricalCdf {
            grid: paoi_grid,
            cdf: paoi_cdf,
        },
        cycle_count,
        seed: cfg.seed,
        generated: per_replication.iter().map(|r| r.generated).sum(),
        discarded: per_replication.iter().map(|r| r.discarded).sum(),
        preempted: per_replication.iter().map(|r| r.preempted).sum(),
        entries,
        per_replication,
    })
}

/// Sup-distance between two piecewise-linear cdfs over the union of their grids.
pub fn ks_distance(a_grid: &[f64], a_cdf: &[f64], b_grid: &[f64], b_cdf: &[f64]) -> f64 {
    a_grid
        .iter()
        .chain(b_grid)
        .map(|&x| (interpolate(a_grid, a_cdf, x) - interpolate(b_grid, b_cdf, x)).abs())
        .fold(0.0, f64::max)
}

/// Sup-distance between the simulated cdf and an analytic table of the
/// same metric. The table must carry the parameters it was computed for.
pub fn empirical_vs_analytic(result: &SimResult, table: &DistributionTable) -> Result<f64> {
    let params = table.params.ok_or_else(|| {
        Error::ParameterMismatch("analytic table does not record its parameters".into())
    })?;
    if !result.config.policy.matches(&params) {
        return Err(Error::ParameterMismatch(format!(
            "simulated {:?} vs analytic {:?}",
            result.config.policy, params
        )));
    }
    let emp = result.empirical(table.metric);
    Ok(ks_distance(&emp.grid, &emp.cdf, &table.grid, &table.cdf))
}
