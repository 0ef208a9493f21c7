//! Freeze-rate optimization.
//!
//! The mean AoI of F/P is minimized over `ln(lambda)` by golden-section
//! search, so the stopping width is a relative tolerance on `lambda`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::format::sig12;
use crate::fp::{fp_amc, FpParams};
use crate::metrics::{aoi_mean, means};
use crate::zw::{zw_closed_form_means, ZwParams};

pub const MAX_EVALUATIONS: usize = 500;
pub const DEFAULT_BRACKET: (f64, f64) = (0.05, 100.0);
pub const DEFAULT_TOL: f64 = 1e-4;
/// An argmin this close to a bracket end (relative to the log-width) is a boundary hit.
const BOUNDARY_FRACTION: f64 = 0.05;
const EXPANSION: f64 = 10.0;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimizes a unimodal `f` on `[lo, hi]` until the bracket is at most `tol`
/// wide. Returns `(argmin, min, evaluations)`.
pub fn golden_section_min<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid("bracket", format!("need finite lo < hi, got [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", "tolerance must be positive"));
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evals = 2;
    while b - a > tol {
        if evals >= MAX_EVALUATIONS {
            return Err(Error::NonContraction(evals));
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evals += 1;
    }
    Ok(if fc <= fd { (c, fc, evals) } else { (d, fd, evals) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub mu1: f64,
    pub mu2: f64,
    pub k: u32,
    pub lambda_star: f64,
    /// Optimal mean freezing time `1 / lambda_star`.
    pub f_star: f64,
    pub aoi_at_star: f64,
    pub zw_aoi: f64,
    pub reduction_pct: f64,
    /// Bracket of the final search.
    pub bracket: (f64, f64),
    pub evaluations: usize,
    pub boundary_hit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub bracket: (f64, f64),
    /// Relative width of the final bracket around `lambda_star`.
    pub tol: f64,
    /// Allow one tenfold expansion when the minimum sits at a bracket end.
    pub expand: bool,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            bracket: DEFAULT_BRACKET,
            tol: DEFAULT_TOL,
            expand: true,
        }
    }
}

pub fn reduction_pct(zw_aoi: f64, aoi: f64) -> f64 {
    100.0 * (zw_aoi - aoi) / zw_aoi
}

/// Mean AoI of F/P as a function of the freeze rate, memoized on `lambda`.
pub struct FreezeObjective {
    mu1: f64,
    mu2: f64,
    k: u32,
    cache: RefCell<HashMap<u64, f64>>,
}

impl FreezeObjective {
    pub fn new(mu1: f64, mu2: f64, k: u32) -> Result<Self> {
        let p = FpParams::new(mu1, mu2, 1.0, k)?;
        Ok(Self {
            mu1: p.mu1,
            mu2: p.mu2,
            k,
            cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn mean_aoi(&self, lambda: f64) -> Result<f64> {
        if let Some(v) = self.cache.borrow().get(&lambda.to_bits()) {
            return Ok(*v);
        }
        let amc = fp_amc(&FpParams::new(self.mu1, self.mu2, lambda, self.k)?)?;
        let v = aoi_mean(&amc)?;
        self.cache.borrow_mut().insert(lambda.to_bits(), v);
        Ok(v)
    }

    /// Distinct chains solved so far.
    pub fn solves(&self) -> usize {
        self.cache.borrow().len()
    }
}

fn near_bound(x: f64, lo: f64, hi: f64) -> Option<bool> {
    let (x, lo, hi) = (x.ln(), lo.ln(), hi.ln());
    let margin = BOUNDARY_FRACTION * (hi - lo);
    if x - lo < margin {
        Some(false)
    } else if hi - x < margin {
        Some(true)
    } else {
        None
    }
}

/// Finds the freeze rate minimizing mean AoI and compares it with ZW.
pub fn optimize_freeze(mu1: f64, mu2: f64, k: u32, cfg: &OptConfig) -> Result<OptResult> {
    let (lo, hi) = cfg.bracket;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(invalid("bracket", format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let objective = FreezeObjective::new(mu1, mu2, k)?;
    let zw = ZwParams::new(mu1, mu2)?;
    let zw_aoi = zw_closed_form_means(&zw).1;

    let search = |lo: f64, hi: f64| {
        golden_section_min(|t| objective.mean_aoi(t.exp()), lo.ln(), hi.ln(), cfg.tol)
            .map(|(t, v, n)| (t.exp(), v, n))
    };
    let mut bracket = (lo, hi);
    let (mut lambda, mut value, mut evaluations) = search(lo, hi)?;
    let mut side = near_bound(lambda, bracket.0, bracket.1);
    if cfg.expand {
        if let Some(upper) = side {
            bracket = if upper { (lo, hi * EXPANSION) } else { (lo / EXPANSION, hi) };
            let (l, v, n) = search(bracket.0, bracket.1)?;
            lambda = l;
            value = v;
            evaluations += n;
            side = near_bound(lambda, bracket.0, bracket.1);
        }
    }
    let warning = side.map(|upper| {
        format!(
            "minimum at the {} end of the bracket [{}, {}]; lambda_star may lie outside",
            if upper { "upper" } else { "lower" },
            bracket.0,
            bracket.1
        )
    });
    Ok(OptResult {
        mu1: zw.mu1,
        mu2: zw.mu2,
        k,
        lambda_star: lambda,
        f_star: 1.0 / lambda,
        aoi_at_star: value,
        zw_aoi,
        reduction_pct: reduction_pct(zw_aoi, value),
        bracket,
        evaluations,
        boundary_hit: warning.is_some(),
        warning,
    })
}

/// Mean AoI reduction of preemption without freezing relative to ZW.
pub fn preemption_only_reduction(mu1: f64, mu2: f64) -> Result<f64> {
    let p = FpParams::preemption_only(mu1, mu2)?;
    let aoi = aoi_mean(&fp_amc(&p)?)?;
    let zw = zw_closed_form_means(&ZwParams::new(mu1, mu2)?).1;
    Ok(reduction_pct(zw, aoi))
}

/// Mean PAoI and mean AoI of F/P over a list of freeze rates.
pub fn lambda_sweep(mu1: f64, mu2: f64, k: u32, lambdas: &[f64]) -> Result<Vec<(f64, f64)>> {
    lambdas
        .par_iter()
        .map(|&l| means(&fp_amc(&FpParams::new(mu1, mu2, l, k)?)?))
        .collect()
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect(),
    }
}

/// Optimizes every `(mu2, k)` pair in parallel; rows come back in input order
/// (`mu2` outer, `k` inner).
pub fn sweep(mu1: f64, mu2s: &[f64], ks: &[u32], cfg: &OptConfig) -> Result<Vec<OptResult>> {
    let points: Vec<(f64, u32)> = mu2s.iter().flat_map(|&m| ks.iter().map(move |&k| (m, k))).collect();
    points
        .par_iter()
        .map(|&(m, k)| optimize_freeze(mu1, m, k, cfg))
        .collect()
}

/// Sweep CSV: `mu2,k,lambda_star,f_star,aoi_star,zw_aoi,reduction_pct`.
pub fn write_sweep_csv<W: Write>(rows: &[OptResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mu2", "k", "lambda_star", "f_star", "aoi_star", "zw_aoi", "reduction_pct"])?;
    for r in rows {
        w.write_record([
            sig12(r.mu2),
            r.k.to_string(),
            sig12(r.lambda_star),
            sig12(r.f_star),
            sig12(r.aoi_at_star),
            sig12(r.zw_aoi),
            sig12(r.reduction_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}
