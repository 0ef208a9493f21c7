//! `aoi`: exact and simulated age of information for dual-server systems.

mod figures;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use aoi_core::{
    optimize_freeze, simulate, summarize_model, Error as CoreError, FpParams, GridSpec,
    ModelParams, OptConfig, SimConfig, SimPolicy, ZwParams,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use figures::{FigureId, FigureOptions};
use output::RunDir;

#[derive(Parser)]
#[command(name = "aoi", version, about = "Age of information for generate-at-will dual-server systems")]
struct Cli {
    /// Output directory (default: $AOI_OUT_DIR or ./out, plus <command>-<timestamp>)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact AoI and peak AoI distributions and moments
    Analyze(AnalyzeArgs),
    /// Discrete-event simulation
    Simulate(SimulateArgs),
    /// Freeze rate minimizing the mean AoI
    Optimize(OptimizeArgs),
    /// Data behind the numerical experiments
    Figure(FigureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Policy {
    Zw,
    Fp,
    /// Simulation only: preemption without freezing
    FpPreemptOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, value_enum)]
    policy: Policy,
    #[arg(long)]
    mu1: f64,
    #[arg(long)]
    mu2: f64,
    /// Freeze rate (F/P only)
    #[arg(long)]
    lambda: Option<f64>,
    /// Erlang order of the freeze time (F/P only)
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct AnalyzeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Grid points per table
    #[arg(long, default_value_t = 2000)]
    points: usize,
    /// Grid end as a multiple of the mean
    #[arg(long, default_value_t = 40.0)]
    max_multiple: f64,
    /// First nonzero grid point as a fraction of the mean
    #[arg(long, default_value_t = 0.01)]
    min_fraction: f64,
    /// Stdout format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct SimulateArgs {
    /// JSON run description; replaces all other flags
    #[arg(long, conflicts_with_all = ["policy", "mu1", "mu2", "lambda", "k"])]
    config: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "config")]
    policy: Option<Policy>,
    #[arg(long, required_unless_present = "config")]
    mu1: Option<f64>,
    #[arg(long, required_unless_present = "config")]
    mu2: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    /// Cycles per replication, warmup included
    #[arg(long, default_value_t = 1_000_000)]
    cycles: u64,
    /// Warmup cycles per replication (default: 1% of cycles)
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    reps: u32,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct OptimizeArgs {
    #[arg(long)]
    mu1: f64,
    #[arg(long)]
    mu2: f64,
    #[arg(long)]
    k: u32,
    /// Lower end of the freeze-rate bracket
    #[arg(long, default_value_t = aoi_core::optimize::DEFAULT_BRACKET.0)]
    lambda_lo: f64,
    /// Upper end of the freeze-rate bracket
    #[arg(long, default_value_t = aoi_core::optimize::DEFAULT_BRACKET.1)]
    lambda_hi: f64,
    /// Relative tolerance on the optimal freeze rate
    #[arg(long, default_value_t = aoi_core::optimize::DEFAULT_TOL)]
    tol: f64,
    /// Do not widen the bracket when the minimum sits at an end
    #[arg(long)]
    no_expand: bool,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct FigureArgs {
    #[arg(value_enum)]
    id: FigureId,
    /// Simulated cycles per replication (figures 3a, 3b)
    #[arg(long, default_value_t = 1_000_000)]
    cycles: u64,
    #[arg(long, default_value_t = 4)]
    reps: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Points on the swept axis (default: 100 for figures 4 and 5, 21 for 6)
    #[arg(long)]
    points: Option<usize>,
}

/// Bad command-line input that clap cannot catch on its own.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn flag(name: &str) -> String {
    format!("--{}", name.replace('_', "-"))
}

/// Maps a core validation error onto the flag that caused it.
fn core_usage(e: CoreError) -> anyhow::Error {
    match e {
        CoreError::InvalidParameter { name, reason } => usage(format!("{}: {reason}", flag(name))),
        other => other.into(),
    }
}

fn fp_params(policy: &str, mu1: f64, mu2: f64, lambda: Option<f64>, k: Option<u32>) -> Result<FpParams> {
    let lambda = lambda.ok_or_else(|| usage(format!("--lambda is required with --policy {policy}")))?;
    let k = k.ok_or_else(|| usage(format!("--k is required with --policy {policy}")))?;
    FpParams::new(mu1, mu2, lambda, k).map_err(core_usage)
}

fn reject_freeze_flags(policy: &str, lambda: Option<f64>, k: Option<u32>) -> Result<()> {
    if lambda.is_some() || k.is_some() {
        return Err(usage(format!("--lambda and --k only apply to --policy fp, not {policy}")));
    }
    Ok(())
}

fn model_params(m: &ModelArgs) -> Result<ModelParams> {
    match m.policy {
        Policy::Zw => {
            reject_freeze_flags("zw", m.lambda, m.k)?;
            Ok(ModelParams::Zw(ZwParams::new(m.mu1, m.mu2).map_err(core_usage)?))
        }
        Policy::Fp => Ok(ModelParams::Fp(fp_params("fp", m.mu1, m.mu2, m.lambda, m.k)?)),
        Policy::FpPreemptOnly => Err(usage(
            "--policy fp-preempt-only is simulation only; analyze it as --policy fp --lambda 1e8 --k 1",
        )),
    }
}

fn analyze(args: &AnalyzeArgs, out: Option<&Path>) -> Result<()> {
    let params = model_params(&args.model)?;
    let grid = GridSpec {
        points: args.points,
        max_multiple: args.max_multiple,
        min_fraction: args.min_fraction,
    };
    grid.validate().map_err(core_usage)?;
    let s = summarize_model(&params, &grid)?;

    #[derive(Serialize)]
    struct MetricSummary<'a> {
        params: &'a ModelParams,
        metric: &'a str,
        mean: f64,
        moments: [f64; 3],
        variance: f64,
        p_success: f64,
        table: &'a str,
    }
    let mut dir = RunDir::create("analyze", out)?;
    for (metric, moments, table) in [
        ("aoi", s.aoi_moments, &s.aoi_table),
        ("paoi", s.paoi_moments, &s.paoi_table),
    ] {
        let table_name = format!("{metric}_table.csv");
        table.write_csv(dir.file(&table_name)?)?;
        dir.json(
            &format!("{metric}_summary.json"),
            &MetricSummary {
                params: &params,
                metric,
                mean: moments[0],
                moments,
                variance: table.variance,
                p_success: s.p_success,
                table: &table_name,
            },
        )?;
    }
    let path = dir.finish(&params, vec![])?;
    match args.format {
        Format::Text => {
            println!("mean_aoi {}", aoi_core::sig12(s.mean_aoi));
            println!("mean_paoi {}", aoi_core::sig12(s.mean_paoi));
            println!("output {}", path.display());
        }
        Format::Json => println!(
            "{}",
            serde_json::json!({
                "mean_aoi": s.mean_aoi,
                "mean_paoi": s.mean_paoi,
                "p_success": s.p_success,
                "output": path,
            })
        ),
    }
    Ok(())
}

fn sim_config(args: &SimulateArgs) -> Result<SimConfig> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
        let cfg: SimConfig = serde_json::from_str(&text)
            .map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
        return Ok(cfg);
    }
    // clap guarantees these when --config is absent
    let (policy, mu1, mu2) = (args.policy.unwrap(), args.mu1.unwrap(), args.mu2.unwrap());
    let policy = match policy {
        Policy::Zw => {
            reject_freeze_flags("zw", args.lambda, args.k)?;
            SimPolicy::Zw(ZwParams::new(mu1, mu2).map_err(core_usage)?)
        }
        Policy::Fp => SimPolicy::Fp(fp_params("fp", mu1, mu2, args.lambda, args.k)?),
        Policy::FpPreemptOnly => {
            reject_freeze_flags("fp-preempt-only", args.lambda, args.k)?;
            SimPolicy::FpPreemptOnly(ZwParams::new(mu1, mu2).map_err(core_usage)?)
        }
    };
    let mut cfg = SimConfig::new(policy, args.cycles, args.seed, args.reps);
    cfg.warmup = args.warmup;
    Ok(cfg)
}

fn simulate_cmd(args: &SimulateArgs, out: Option<&Path>) -> Result<()> {
    let cfg = sim_config(args)?;
    cfg.validate().map_err(|e| match e {
        CoreError::InvalidParameter { name, reason } => {
            let name = match name {
                "horizon" => "cycles",
                "replications" => "reps",
                other => other,
            };
            usage(format!("{}: {reason}", flag(name)))
        }
        other => other.into(),
    })?;
    let r = simulate(&cfg)?;
    let mut dir = RunDir::create("simulate", out)?;
    dir.json("sim_result.json", &r)?;
    r.empirical_aoi_cdf.write_csv(dir.file("aoi_cdf.csv")?)?;
    r.empirical_paoi_cdf.write_csv(dir.file("paoi_cdf.csv")?)?;
    let path = dir.finish(&cfg, vec![cfg.seed])?;
    let show = |e: &aoi_core::sim::Estimate| match e.std_error {
        Some(se) => format!("{} +/- {}", aoi_core::sig12(e.value), aoi_core::sig12(se)),
        None => aoi_core::sig12(e.value),
    };
    println!("mean_aoi {}", show(&r.mean_aoi));
    println!("mean_paoi {}", show(&r.mean_paoi));
    println!("cycles {} discarded {} preempted {}", r.cycle_count, r.discarded, r.preempted);
    println!("output {}", path.display());
    Ok(())
}

fn optimize_cmd(args: &OptimizeArgs, out: Option<&Path>) -> Result<()> {
    let cfg = OptConfig {
        bracket: (args.lambda_lo, args.lambda_hi),
        tol: args.tol,
        expand: !args.no_expand,
    };
    let r = optimize_freeze(args.mu1, args.mu2, args.k, &cfg).map_err(|e| match e {
        CoreError::InvalidParameter { name: "bracket", reason } => {
            usage(format!("--lambda-lo/--lambda-hi: {reason}"))
        }
        e => core_usage(e),
    })?;
    let mut dir = RunDir::create("optimize", out)?;
    dir.json("opt_result.json", &r)?;

    #[derive(Serialize)]
    struct Params {
        mu1: f64,
        mu2: f64,
        k: u32,
        config: OptConfig,
    }
    let path = dir.finish(&Params { mu1: args.mu1, mu2: args.mu2, k: args.k, config: cfg }, vec![])?;
    println!("lambda_star {}", aoi_core::sig12(r.lambda_star));
    println!("f_star {}", aoi_core::sig12(r.f_star));
    println!("aoi_at_star {}", aoi_core::sig12(r.aoi_at_star));
    println!("zw_aoi {}", aoi_core::sig12(r.zw_aoi));
    println!("reduction_pct {}", aoi_core::sig12(r.reduction_pct));
    if let Some(w) = &r.warning {
        eprintln!("warning: {w}");
    }
    println!("output {}", path.display());
    Ok(())
}

fn figure_cmd(args: &FigureArgs, out: Option<&Path>) -> Result<()> {
    let points = args.points.unwrap_or(match args.id {
        FigureId::FreezeTime => 21,
        _ => 100,
    });
    if points < 2 {
        return Err(usage("--points: need at least 2"));
    }
    let opts = FigureOptions {
        figure: args.id,
        cycles: args.cycles,
        replications: args.reps,
        seed: args.seed,
        points,
    };
    if matches!(args.id, FigureId::PaoiCdf | FigureId::AoiCdf) {
        SimConfig::new(SimPolicy::Zw(ZwParams::new(1.0, 1.0)?), args.cycles, args.seed, args.reps)
            .validate()
            .map_err(|e| usage(e.to_string()))?;
    }
    let id = args.id.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let mut dir = RunDir::create(&format!("figure{id}"), out)?;
    let seeds = figures::run(&opts, &mut dir)?;
    let path = dir.finish(&opts, seeds)?;
    println!("output {}", path.display());
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<CoreError>() {
        Some(CoreError::InvalidParameter { .. } | CoreError::ParameterMismatch(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.as_deref();
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a, out),
        Command::Simulate(a) => simulate_cmd(a, out),
        Command::Optimize(a) => optimize_cmd(a, out),
        Command::Figure(a) => figure_cmd(a, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
