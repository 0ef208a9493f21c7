//! AoI and peak-AoI laws of an absorbing chain.
//!
//! With `w = S^{-1} V_success` and `z = S^{-1} mask`, the conditional PAoI
//! law and the AoI law share one propagated row vector `v(x) = init exp(Sx)`:
//!
//! * PAoI: pdf `v(x) V_success / (-init w)`, cdf `1 - v(x) w / (init w)`
//! * AoI:  pdf `v(x) mask / (-init z)`,      cdf `1 - v(x) z / (init z)`
//!
//! Moments of order `i` are `i! init (-S)^{-(i+1)} c / (init (-S)^{-1} c)`
//! with `c` either column.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::format::sig12;
use crate::linalg::Solver;
use crate::model::ModelParams;
use crate::phtype::{AmcSpec, Uniformized};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Aoi,
    Paoi,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Aoi => "aoi",
            Metric::Paoi => "paoi",
        }
    }
}

/// Output grid: the point 0 followed by `points - 1` log-spaced points from
/// `min_fraction * mean` to `max_multiple * mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    pub max_multiple: f64,
    pub min_fraction: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 2000,
            max_multiple: 40.0,
            min_fraction: 0.01,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points < 3 {
            return Err(invalid("points", "grid needs at least 3 points"));
        }
        if !(self.min_fraction > 0.0 && self.max_multiple > self.min_fraction) {
            return Err(invalid(
                "max_multiple",
                "need 0 < min_fraction < max_multiple",
            ));
        }
        Ok(())
    }

    pub fn grid(&self, mean: f64) -> Vec<f64> {
        let lo = (self.min_fraction * mean).ln();
        let hi = (self.max_multiple * mean).ln();
        let m = self.points - 1;
        std::iter::once(0.0)
            .chain((0..m).map(|i| (lo + (hi - lo) * i as f64 / (m - 1) as f64).exp()))
            .collect()
    }
}

/// Tabulated pdf/cdf with moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
    pub grid: Vec<f64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

impl DistributionTable {
    /// Linear interpolation of the cdf, held constant outside the grid.
    pub fn cdf_at(&self, x: f64) -> f64 {
        interpolate(&self.grid, &self.cdf, x)
    }

    /// Trapezoidal integral of the pdf over the grid.
    pub fn trapezoid_mass(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.pdf.windows(2))
            .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
            .sum()
    }

    /// CSV with header `x,pdf,cdf`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "pdf", "cdf"])?;
        for i in 0..self.grid.len() {
            w.write_record([sig12(self.grid[i]), sig12(self.pdf[i]), sig12(self.cdf[i])])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    debug_assert_eq!(grid.len(), values.len());
    let n = grid.len();
    if n == 0 {
        return f64::NAN;
    }
    if x <= grid[0] {
        return values[0];
    }
    if x >= grid[n - 1] {
        return values[n - 1];
    }
    let j = grid.partition_point(|&g| g <= x);
    let (x0, x1) = (grid[j - 1], grid[j]);
    let t = (x - x0) / (x1 - x0);
    values[j - 1] + t * (values[j] - values[j - 1])
}

/// Means, moments, success probability and both tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoiSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
    pub mean_aoi: f64,
    pub mean_paoi: f64,
    pub aoi_moments: [f64; 3],
    pub paoi_moments: [f64; 3],
    pub p_success: f64,
    pub aoi_table: DistributionTable,
    pub paoi_table: DistributionTable,
}

/// Factorizations and the solved columns shared by every evaluation on one chain.
#[derive(Debug, Clone)]
pub struct AmcAnalysis<'a> {
    amc: &'a AmcSpec,
    solver: Solver,
    kernel: Uniformized,
    success: DVector<f64>,
    // S^{-1} V_success and S^{-1} mask
    w: DVector<f64>,
    z: DVector<f64>,
    init_w: f64,
    init_z: f64,
}

fn check_time(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        Err(Error::NegativeTime(x))
    } else {
        Ok(())
    }
}

impl<'a> AmcAnalysis<'a> {
    pub fn new(amc: &'a AmcSpec) -> Result<Self> {
        let solver = Solver::new(amc.sub_generator())?;
        let success = amc.absorbing_column(amc.success_col())?;
        let w = solver.right(&success)?;
        let z = solver.right(amc.aoi_mask())?;
        let init_w = amc.init().dot(&w);
        let init_z = amc.init().dot(&z);
        if !(init_w < 0.0) || !(init_z < 0.0) {
            return Err(Error::InvalidChain(
                "successful absorption or the age states are unreachable".into(),
            ));
        }
        Ok(Self {
            amc,
            solver,
            kernel: Uniformized::new(amc.sub_generator()),
            success,
            w,
            z,
            init_w,
            init_z,
        })
    }

    /// `-init S^{-1} V_success`.
    pub fn p_success(&self) -> f64 {
        -self.init_w
    }

    fn column(&self, metric: Metric) -> &DVector<f64> {
        match metric {
            Metric::Paoi => &self.success,
            Metric::Aoi => self.amc.aoi_mask(),
        }
    }

    fn propagate(&self, v: &[f64], dx: f64) -> Vec<f64> {
        self.kernel.apply(v, dx)
    }

    fn state(&self, x: f64) -> DVector<f64> {
        DVector::from_vec(self.propagate(self.amc.init().as_slice(), x))
    }

    fn pdf_of(&self, metric: Metric, v: &DVector<f64>) -> f64 {
        let norm = match metric {
            Metric::Paoi => -self.init_w,
            Metric::Aoi => -self.init_z,
        };
        (v.dot(self.column(metric)) / norm).max(0.0)
    }

    fn cdf_of(&self, metric: Metric, v: &DVector<f64>) -> f64 {
        let (solved, total) = match metric {
            Metric::Paoi => (&self.w, self.init_w),
            Metric::Aoi => (&self.z, self.init_z),
        };
        (1.0 - v.dot(solved) / total).clamp(0.0, 1.0)
    }

    pub fn pdf(&self, metric: Metric, x: f64) -> Result<f64> {
        check_time(x)?;
        Ok(self.pdf_of(metric, &self.state(x)))
    }

    pub fn cdf(&self, metric: Metric, x: f64) -> Result<f64> {
        check_time(x)?;
        Ok(self.cdf_of(metric, &self.state(x)))
    }

    /// Non-central moment of order `i >= 1`.
    pub fn moment(&self, metric: Metric, i: u32) -> Result<f64> {
        if i < 1 {
            return Err(invalid("i", "moment order must be at least 1"));
        }
        let c = self.column(metric);
        let mut y = -self.solver.left(self.amc.init())?;
        let first = y.dot(c);
        let mut factorial = 1.0;
        for j in 1..=i {
            y = -self.solver.left(&y)?;
            factorial *= j as f64;
        }
        Ok(factorial * y.dot(c) / first)
    }

    pub fn mean(&self, metric: Metric) -> Result<f64> {
        self.moment(metric, 1)
    }

    /// Tabulates pdf and cdf on an increasing nonnegative grid by
    /// propagating `init exp(Sx)` from one grid point to the next.
    pub fn table(&self, metric: Metric, grid: &[f64]) -> Result<DistributionTable> {
        if grid.is_empty() {
            return Err(invalid("grid", "grid is empty"));
        }
        check_time(grid[0])?;
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("grid", "grid must be strictly increasing"));
        }
        let mut pdf = Vec::with_capacity(grid.len());
        let mut cdf = Vec::with_capacity(grid.len());
        let mut v = self.propagate(self.amc.init().as_slice(), grid[0]);
        let mut last = grid[0];
        let mut running = 0.0_f64;
        for &x in grid {
            if x > last {
                v = self.propagate(&v, x - last);
                last = x;
            }
            let dv = DVector::from_column_slice(&v);
            pdf.push(self.pdf_of(metric, &dv));
            // rounding-level wiggles near 1 are flattened
            running = running.max(self.cdf_of(metric, &dv));
            cdf.push(running);
        }
        let mean = self.moment(metric, 1)?;
        let second_moment = self.moment(metric, 2)?;
        Ok(DistributionTable {
            metric,
            params: None,
            grid: grid.to_vec(),
            pdf,
            cdf,
            mean,
            second_moment,
            variance: second_moment - mean * mean,
        })
    }
}

pub fn paoi_cdf(amc: &AmcSpec, x: f64) -> Result<f64> {
    AmcAnalysis::new(amc)?.cdf(Metric::Paoi, x)
}

pub fn paoi_pdf(amc: &AmcSpec, x: f64) -> Result<f64> {
    AmcAnalysis::new(amc)?.pdf(Metric::Paoi, x)
}

pub fn paoi_mean(amc: &AmcSpec) -> Result<f64> {
    AmcAnalysis::new(amc)?.mean(Metric::Paoi)
}

pub fn aoi_pdf(amc: &AmcSpec, x: f64) -> Result<f64> {
    AmcAnalysis::new(amc)?.pdf(Metric::Aoi, x)
}

pub fn aoi_cdf(amc: &AmcSpec, x: f64) -> Result<f64> {
    AmcAnalysis::new(amc)?.cdf(Metric::Aoi, x)
}

pub fn aoi_mean(amc: &AmcSpec) -> Result<f64> {
    AmcAnalysis::new(amc)?.mean(Metric::Aoi)
}

/// Both means at the cost of one factorization.
pub fn means(amc: &AmcSpec) -> Result<(f64, f64)> {
    let a = AmcAnalysis::new(amc)?;
    Ok((a.mean(Metric::Paoi)?, a.mean(Metric::Aoi)?))
}

pub fn summarize(amc: &AmcSpec, grid: &GridSpec) -> Result<AoiSummary> {
    grid.validate()?;
    let a = AmcAnalysis::new(amc)?;
    let moments = |m| -> Result<[f64; 3]> { Ok([a.moment(m, 1)?, a.moment(m, 2)?, a.moment(m, 3)?]) };
    let aoi_moments = moments(Metric::Aoi)?;
    let paoi_moments = moments(Metric::Paoi)?;
    let aoi_table = a.table(Metric::Aoi, &grid.grid(aoi_moments[0]))?;
    let paoi_table = a.table(Metric::Paoi, &grid.grid(paoi_moments[0]))?;
    Ok(AoiSummary {
        params: None,
        mean_aoi: aoi_moments[0],
        mean_paoi: paoi_moments[0],
        aoi_moments,
        paoi_moments,
        p_success: a.p_success(),
        aoi_table,
        paoi_table,
    })
}

/// [`summarize`] on the chain built from `params`, with the parameters
/// attached to the summary and both tables.
pub fn summarize_model(params: &ModelParams, grid: &GridSpec) -> Result<AoiSummary> {
    let amc = params.build_amc()?;
    let mut s = summarize(&amc, grid)?;
    s.params = Some(*params);
    s.aoi_table.params = Some(*params);
    s.paoi_table.params = Some(*params);
    Ok(s)
}
