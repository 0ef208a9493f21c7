//! Plot-ready data for the numerical experiments.

use std::io::Write;

use anyhow::Result;
use aoi_core::optimize::{lambda_sweep, log_grid, preemption_only_reduction, sweep, write_sweep_csv};
use aoi_core::{
    optimize_freeze, sig12, simulate, summarize_model, zw_closed_form_means, FpParams, GridSpec,
    Metric, ModelParams, OptConfig, SimConfig, SimPolicy, ZwParams,
};
use clap::ValueEnum;
use serde::Serialize;

use crate::output::RunDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum FigureId {
    /// Peak AoI cdfs, analytic and simulated, k in {1, 10, 50}
    #[value(name = "3a")]
    PaoiCdf,
    /// AoI cdfs, analytic and simulated, k in {1, 10, 50}
    #[value(name = "3b")]
    AoiCdf,
    /// Mean peak AoI against the freeze rate
    #[value(name = "4")]
    MeanPaoi,
    /// Mean AoI against the freeze rate, with the optimum marked
    #[value(name = "5")]
    MeanAoi,
    /// Optimal freeze time and AoI reduction against mu2
    #[value(name = "6")]
    FreezeTime,
}

#[derive(Debug, Clone, Serialize)]
pub struct FigureOptions {
    pub figure: FigureId,
    pub cycles: u64,
    pub replications: u32,
    pub seed: u64,
    pub points: usize,
}

const CDF_ORDERS: [u32; 3] = [1, 10, 50];
const SWEEP_ORDERS: [u32; 3] = [1, 10, 50];

pub fn run(opts: &FigureOptions, dir: &mut RunDir) -> Result<Vec<u64>> {
    match opts.figure {
        FigureId::PaoiCdf => cdfs(Metric::Paoi, "figure3a.csv", opts, dir),
        FigureId::AoiCdf => cdfs(Metric::Aoi, "figure3b.csv", opts, dir),
        FigureId::MeanPaoi => means_vs_lambda(Metric::Paoi, opts, dir).map(|_| vec![]),
        FigureId::MeanAoi => means_vs_lambda(Metric::Aoi, opts, dir).map(|_| vec![]),
        FigureId::FreezeTime => freeze_time(opts, dir).map(|_| vec![]),
    }
}

/// Long format: `k,source,x,cdf` with source `analytic` or `simulation`.
fn cdfs(metric: Metric, name: &str, opts: &FigureOptions, dir: &mut RunDir) -> Result<Vec<u64>> {
    let mut w = csv::Writer::from_writer(dir.file(name)?);
    w.write_record(["k", "source", "x", "cdf"])?;
    let mut seeds = Vec::new();
    for (i, k) in CDF_ORDERS.into_iter().enumerate() {
        let p = FpParams::new(0.5, 0.1, 1.0, k)?;
        let summary = summarize_model(&ModelParams::Fp(p), &GridSpec::default())?;
        let table = match metric {
            Metric::Aoi => &summary.aoi_table,
            Metric::Paoi => &summary.paoi_table,
        };
        let seed = opts.seed + i as u64;
        seeds.push(seed);
        let mut cfg = SimConfig::new(SimPolicy::Fp(p), opts.cycles, seed, opts.replications);
        cfg.aoi_grid = Some(summary.aoi_table.grid.clone());
        cfg.paoi_grid = Some(summary.paoi_table.grid.clone());
        let sim = simulate(&cfg)?;
        let emp = sim.empirical(metric);
        for (x, c) in table.grid.iter().zip(&table.cdf) {
            w.write_record([k.to_string(), "analytic".into(), sig12(*x), sig12(*c)])?;
        }
        for (x, c) in emp.grid.iter().zip(&emp.cdf) {
            w.write_record([k.to_string(), "simulation".into(), sig12(*x), sig12(*c)])?;
        }
    }
    w.flush()?;
    Ok(seeds)
}

fn means_vs_lambda(metric: Metric, opts: &FigureOptions, dir: &mut RunDir) -> Result<()> {
    let lambdas = log_grid(0.01, 1000.0, opts.points);
    let (name, column, zw_column) = match metric {
        Metric::Paoi => ("figure4.csv", "mean_paoi", "zw_paoi"),
        Metric::Aoi => ("figure5.csv", "mean_aoi", "zw_aoi"),
    };
    let mut w = csv::Writer::from_writer(dir.file(name)?);
    w.write_record(["mu1", "mu2", "k", "lambda", column, zw_column])?;
    let mut optima = Vec::new();
    for mu1 in [0.1, 0.5] {
        let (zw_paoi, zw_aoi) = zw_closed_form_means(&ZwParams::new(mu1, 0.1)?);
        let zw = if metric == Metric::Paoi { zw_paoi } else { zw_aoi };
        for (l, (paoi, aoi)) in lambdas.iter().zip(lambda_sweep(mu1, 0.1, 50, &lambdas)?) {
            let v = if metric == Metric::Paoi { paoi } else { aoi };
            w.write_record([sig12(mu1), sig12(0.1), "50".into(), sig12(*l), sig12(v), sig12(zw)])?;
        }
        if metric == Metric::Aoi {
            optima.push(optimize_freeze(mu1, 0.1, 50, &OptConfig::default())?);
        }
    }
    w.flush()?;
    if !optima.is_empty() {
        let mut w = csv::Writer::from_writer(dir.file("figure5_optimum.csv")?);
        w.write_record(["mu1", "lambda_star", "f_star", "aoi_star", "zw_aoi"])?;
        for r in optima {
            w.write_record([sig12(r.mu1), sig12(r.lambda_star), sig12(r.f_star), sig12(r.aoi_at_star), sig12(r.zw_aoi)])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn freeze_time(opts: &FigureOptions, dir: &mut RunDir) -> Result<()> {
    let mu2s = log_grid(0.01, 1.0, opts.points);
    let rows = sweep(1.0, &mu2s, &SWEEP_ORDERS, &OptConfig::default())?;
    write_sweep_csv(&rows, dir.file("figure6.csv")?)?;
    let mut w = csv::Writer::from_writer(dir.file("figure6_preemption_only.csv")?);
    w.write_record(["mu2", "reduction_pct"])?;
    for mu2 in mu2s {
        w.write_record([sig12(mu2), sig12(preemption_only_reduction(1.0, mu2)?)])?;
    }
    w.flush()?;
    let mut out = std::io::stdout().lock();
    if let Some(best) = rows.iter().max_by(|a, b| a.reduction_pct.total_cmp(&b.reduction_pct)) {
        writeln!(out, "largest reduction {:.2}% at mu2 = {:.4}, k = {}", best.reduction_pct, best.mu2, best.k)?;
    }
    Ok(())
}
