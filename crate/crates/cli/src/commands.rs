//! Typed command plans and their execution.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use arbsim_core::arbitrage::{self, arbitrage_step};
use arbsim_core::experiments::{
    self, frequency_scaling, lvr_accounting, run_ensemble, run_sweep_with, run_trace,
};
use arbsim_core::hitting::{fit_sweep, sweep_thresholds, SweepMode, SweepPoint};
use arbsim_core::rng::derive_seed;
use arbsim_core::stochastic::{gen_gbm_path, gen_random_walk, path_stats, PricePath};
use arbsim_core::{
    AdaptiveParams, ArbStrategy, ExperimentConfig, FeeLedger, FeePolicy, FeeSchedule, GbmParams,
    IncrementKind, PoolState, RunResult, ThresholdSpec, WalkParams,
};
use rayon::prelude::*;

use crate::output::{json_lines, num, write_atomic, Table};
use crate::plot::{Plot, Series};
use crate::settings::Settings;
use crate::{CliError, Command};

pub struct Context {
    pub out_dir: PathBuf,
    pub plot: bool,
    pub jsonl: bool,
    pub metadata: String,
}

pub enum Plan {
    Walk {
        params: WalkParams,
        runs: usize,
    },
    Gbm {
        params: GbmParams,
        runs: usize,
    },
    HitSweep {
        walk: WalkParams,
        template: ThresholdSpec,
        mode: SweepMode,
        grid: Vec<f64>,
        runs: usize,
    },
    ArbStep {
        pool: PoolState,
        alpha: f64,
        fees: FeeSchedule,
        strategy: ArbStrategy,
        trace: Option<ExperimentConfig>,
    },
    FeeSweep(ExperimentConfig),
    PolicySim(ExperimentConfig),
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// `n` points from `lo` to `hi`, evenly spaced or geometrically spaced.
pub fn spaced(lo: f64, hi: f64, n: usize, log: bool) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if log {
                    (lo.ln() + t * (hi.ln() - lo.ln())).exp()
                } else {
                    lo + t * (hi - lo)
                }
            })
            .collect(),
    }
}

fn gbm_from(s: &Settings) -> Result<GbmParams, CliError> {
    let increment: IncrementKind = s.get("gbm.increment")?;
    let p = GbmParams::new(
        s.get("gbm.p0")?,
        s.get("gbm.mu")?,
        s.get("gbm.sigma")?,
        s.get("gbm.steps")?,
        0,
    )
    .with_increment(increment);
    p.validate().map_err(usage)?;
    Ok(p)
}

fn policy_from(s: &Settings) -> Result<FeePolicy, CliError> {
    let policy = match s.raw("policy.kind") {
        "static_symmetric" => FeePolicy::StaticSymmetric { fee: s.get("policy.fee")? },
        "static_asymmetric" => FeePolicy::StaticAsymmetric {
            f_b_to_a: s.get("policy.f_b_to_a")?,
            f_a_to_b: s.get("policy.f_a_to_b")?,
        },
        "directional_adaptive" => FeePolicy::DirectionalAdaptive(AdaptiveParams {
            base_fee: s.get("policy.base_fee")?,
            drift_gain: s.get("policy.drift_gain")?,
            halflife: s.get("policy.halflife")?,
            min_fee: s.get("policy.min_fee")?,
            max_fee: s.get("policy.max_fee")?,
        }),
        other => {
            return Err(CliError::Usage(format!(
                "unknown policy.kind `{other}` (static_symmetric, static_asymmetric, directional_adaptive)"
            )))
        }
    };
    policy.validate().map_err(usage)?;
    Ok(policy)
}

impl Plan {
    pub fn build(command: &Command, s: &Settings) -> Result<Self, CliError> {
        let seed: u64 = s.get("seed")?;
        let plan = match command {
            Command::Walk(_) => {
                let params = WalkParams::new(
                    s.get("walk.p0")?,
                    s.get("walk.sigma")?,
                    s.get("walk.p_up")?,
                    s.get("walk.steps")?,
                    seed,
                );
                params.validate().map_err(usage)?;
                Self::Walk {
                    params,
                    runs: positive(s, "walk.runs")?,
                }
            }
            Command::Gbm(_) => Self::Gbm {
                params: gbm_from(s)?.with_seed(seed),
                runs: positive(s, "gbm.runs")?,
            },
            Command::HitSweep(_) => {
                let walk = WalkParams::new(
                    s.get("hit.p0")?,
                    s.get("hit.sigma")?,
                    s.get("hit.p_up")?,
                    0,
                    seed,
                );
                walk.validate().map_err(usage)?;
                let fixed: f64 = s.get("hit.fixed")?;
                let max_steps: u64 = s.get("hit.max_steps")?;
                let blank = ThresholdSpec {
                    upper: None,
                    lower: None,
                    max_steps,
                };
                let (mode, template) = match s.raw("hit.mode") {
                    "symmetric" => (SweepMode::Symmetric, blank),
                    "upper" => (
                        SweepMode::Upper,
                        ThresholdSpec {
                            lower: Some(fixed),
                            ..blank
                        },
                    ),
                    "lower" => (
                        SweepMode::Lower,
                        ThresholdSpec {
                            upper: Some(fixed),
                            ..blank
                        },
                    ),
                    "one_sided" => (SweepMode::Upper, blank),
                    other => {
                        return Err(CliError::Usage(format!(
                            "unknown hit.mode `{other}` (symmetric, upper, lower, one_sided)"
                        )))
                    }
                };
                if max_steps < 1 {
                    return Err(usage("hit.max_steps must be >= 1"));
                }
                let grid = spaced(
                    s.get("hit.grid_min")?,
                    s.get("hit.grid_max")?,
                    s.get("hit.grid_points")?,
                    true,
                );
                Self::HitSweep {
                    walk,
                    template,
                    mode,
                    grid,
                    runs: positive(s, "hit.runs")?,
                }
            }
            Command::ArbStep(_) => {
                let pool = PoolState::new(s.get("pool.x_a")?, s.get("pool.x_b")?).map_err(usage)?;
                let fee: f64 = s.get("arb.fee")?;
                let fees = FeeSchedule::symmetric(fee)
                    .with_flashloan_fee(s.get("arb.f_fl")?)
                    .with_txn(s.get("arb.txn")?);
                fees.validate().map_err(usage)?;
                let alpha: f64 = s.get("arb.alpha")?;
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(usage(format!("arb.alpha must be > 0, got {alpha}")));
                }
                let strategy: ArbStrategy = s.get("arb.strategy")?;
                let trace_steps: usize = s.get("arb.trace_steps")?;
                let trace = if trace_steps > 0 {
                    let config = ExperimentConfig {
                        gbm: GbmParams::new(
                            pool.spot_price(),
                            0.0,
                            s.get("arb.trace_sigma")?,
                            trace_steps,
                            0,
                        ),
                        n_runs: 1,
                        pool_init: (pool.x_a(), pool.x_b()),
                        strategy,
                        policy: FeePolicy::StaticSymmetric { fee },
                        fee_grid: Vec::new(),
                        master_seed: seed,
                        f_fl: fees.f_fl,
                        txn: fees.txn,
                    };
                    config.validate().map_err(usage)?;
                    Some(config)
                } else {
                    None
                };
                Self::ArbStep {
                    pool,
                    alpha,
                    fees,
                    strategy,
                    trace,
                }
            }
            Command::FeeSweep(_) => {
                let mut fee_grid: Vec<f64> = s.get_list("sweep.fees")?;
                if fee_grid.is_empty() {
                    let log = match s.raw("sweep.spacing") {
                        "linear" => false,
                        "log" => true,
                        other => {
                            return Err(usage(format!(
                                "unknown sweep.spacing `{other}` (linear, log)"
                            )))
                        }
                    };
                    fee_grid = spaced(
                        s.get("sweep.fee_min")?,
                        s.get("sweep.fee_max")?,
                        s.get("sweep.fee_points")?,
                        log,
                    );
                }
                if fee_grid.is_empty() {
                    return Err(usage("fee grid is empty"));
                }
                let config = ExperimentConfig {
                    gbm: gbm_from(s)?,
                    n_runs: positive(s, "sweep.runs")?,
                    pool_init: (s.get("pool.x_a")?, s.get("pool.x_b")?),
                    strategy: s.get("sweep.strategy")?,
                    policy: FeePolicy::default(),
                    fee_grid,
                    master_seed: seed,
                    f_fl: s.get("sweep.f_fl")?,
                    txn: s.get("sweep.txn")?,
                };
                config.validate().map_err(usage)?;
                Self::FeeSweep(config)
            }
            Command::PolicySim(_) => {
                let config = ExperimentConfig {
                    gbm: gbm_from(s)?,
                    n_runs: positive(s, "policy.runs")?,
                    pool_init: (s.get("pool.x_a")?, s.get("pool.x_b")?),
                    strategy: s.get("policy.strategy")?,
                    policy: policy_from(s)?,
                    fee_grid: Vec::new(),
                    master_seed: seed,
                    f_fl: 0.0,
                    txn: 0.0,
                };
                config.validate().map_err(usage)?;
                Self::PolicySim(config)
            }
        };
        Ok(plan)
    }

    pub fn run(&self, ctx: &Context, out: &mut dyn Write) -> Result<()> {
        match self {
            Self::Walk { params, runs } => {
                let paths: Vec<PricePath> = (0..*runs as u64)
                    .into_par_iter()
                    .map(|i| gen_random_walk(&params.with_seed(derive_seed(params.seed, i))))
                    .collect::<arbsim_core::Result<_>>()?;
                write_paths(ctx, "walk", &paths, out)
            }
            Self::Gbm { params, runs } => {
                let paths: Vec<PricePath> = (0..*runs as u64)
                    .into_par_iter()
                    .map(|i| gen_gbm_path(&params.with_seed(derive_seed(params.seed, i))))
                    .collect::<arbsim_core::Result<_>>()?;
                write_paths(ctx, "gbm", &paths, out)
            }
            Self::HitSweep {
                walk,
                template,
                mode,
                grid,
                runs,
            } => {
                let points = sweep_thresholds(walk, template, *mode, grid, *runs)?;
                hit_sweep_output(ctx, &points, out)
            }
            Self::ArbStep {
                pool,
                alpha,
                fees,
                strategy,
                trace,
            } => arb_step_output(ctx, pool, *alpha, fees, *strategy, trace.as_ref(), out),
            Self::FeeSweep(config) => fee_sweep_output(ctx, config, out),
            Self::PolicySim(config) => policy_sim_output(ctx, config, out),
        }
    }
}

fn positive(s: &Settings, key: &str) -> Result<usize, CliError> {
    let n: usize = s.get(key)?;
    if n == 0 {
        return Err(CliError::Usage(format!("{key} must be >= 1")));
    }
    Ok(n)
}

fn write_paths(ctx: &Context, stem: &str, paths: &[PricePath], out: &mut dyn Write) -> Result<()> {
    let first = &paths[0];
    let mut t = Table::new(&ctx.metadata, &["step", "price"])?;
    for (i, p) in first.prices.iter().enumerate() {
        t.row([i.to_string(), num(*p)])?;
    }
    let file = t.write(&ctx.out_dir, &format!("{stem}.csv"))?;
    writeln!(out, "wrote {}", file.display())?;

    if paths.len() > 1 {
        let mut t = Table::new(&ctx.metadata, &["run", "final_price", "displacement"])?;
        for (i, p) in paths.iter().enumerate() {
            t.row([i.to_string(), num(p.terminal()), num(p.displacement())])?;
        }
        let file = t.write(&ctx.out_dir, &format!("{stem}_ensemble.csv"))?;
        writeln!(out, "wrote {}", file.display())?;
        let stats = path_stats(paths)?;
        writeln!(out, "runs {}", stats.n_paths)?;
        writeln!(
            out,
            "mean_final_price {} +- {}",
            num(first.initial() + stats.mean_displacement.mean),
            num(stats.mean_displacement.std_error)
        )?;
        writeln!(
            out,
            "displacement_variance {} +- {}",
            num(stats.displacement_variance),
            num(stats.variance_std_error)
        )?;
    }
    if ctx.plot {
        let plot = Plot {
            title: format!("{stem} path"),
            x_label: "step".into(),
            y_label: "price".into(),
            log_x: false,
            log_y: false,
            series: vec![Series::new(
                "price",
                first
                    .prices
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i as f64, *p, 0.0))
                    .collect(),
            )
            .joined()],
        };
        write_svg(ctx, &format!("{stem}.svg"), &plot, out)?;
    }
    Ok(())
}

fn write_svg(ctx: &Context, name: &str, plot: &Plot, out: &mut dyn Write) -> Result<()> {
    let file = write_atomic(&ctx.out_dir, name, plot.render().as_bytes())?;
    writeln!(out, "wrote {}", file.display())?;
    Ok(())
}

fn hit_sweep_output(ctx: &Context, points: &[SweepPoint], out: &mut dyn Write) -> Result<()> {
    let mut t = Table::new(
        &ctx.metadata,
        &["delta_p", "mean_steps", "std_error", "censored_fraction"],
    )?;
    for p in points {
        t.row([
            num(p.delta_p),
            num(p.estimate.mean_steps),
            num(p.estimate.std_error),
            num(p.estimate.censored_fraction()),
        ])?;
    }
    let file = t.write(&ctx.out_dir, "hit_sweep.csv")?;
    writeln!(out, "wrote {}", file.display())?;
    match fit_sweep(points) {
        Ok(fit) => writeln!(
            out,
            "exponent {} amplitude {} r_squared {}",
            num(fit.exponent),
            num(fit.amplitude),
            num(fit.r_squared)
        )?,
        Err(e) => writeln!(out, "no power-law fit: {e}")?,
    }
    if ctx.plot {
        let plot = Plot {
            title: "hitting time".into(),
            x_label: "threshold".into(),
            y_label: "mean steps".into(),
            log_x: true,
            log_y: true,
            series: vec![Series::new(
                "N_hit",
                points
                    .iter()
                    .filter(|p| p.estimate.is_usable())
                    .map(|p| (p.delta_p, p.estimate.mean_steps, p.estimate.std_error))
                    .collect(),
            )],
        };
        write_svg(ctx, "hit_sweep.svg", &plot, out)?;
    }
    Ok(())
}

fn arb_step_output(
    ctx: &Context,
    pool: &PoolState,
    alpha: f64,
    fees: &FeeSchedule,
    strategy: ArbStrategy,
    trace: Option<&ExperimentConfig>,
    out: &mut dyn Write,
) -> Result<()> {
    let p_cex = alpha * pool.spot_price();
    let mut after = *pool;
    let outcome = arbitrage_step(&mut after, &mut FeeLedger::default(), p_cex, strategy, fees)?;
    let fee = outcome.fee_revenue.map_or(0.0, |(_, f)| f);
    let threshold = arbitrage::min_alpha(strategy, fees.f_b_to_a, fees.f_fl)?;

    writeln!(out, "alpha {}", num(alpha))?;
    writeln!(out, "alpha_min {}", num(threshold))?;
    writeln!(out, "executed {}", outcome.executed)?;
    writeln!(out, "flashloan {}", num(outcome.flashloan))?;
    writeln!(out, "profit {}", num(outcome.arb_profit))?;
    writeln!(out, "fee {}", num(fee))?;
    writeln!(out, "spot_after {}", num(outcome.spot_after))?;

    let mut t = Table::new(
        &ctx.metadata,
        &[
            "alpha",
            "p_cex",
            "executed",
            "direction",
            "flashloan",
            "arb_profit",
            "fee",
            "spot_after",
            "alpha_after",
        ],
    )?;
    t.row([
        num(alpha),
        num(p_cex),
        outcome.executed.to_string(),
        direction_name(outcome.direction).to_string(),
        num(outcome.flashloan),
        num(outcome.arb_profit),
        num(fee),
        num(outcome.spot_after),
        num(outcome.alpha_after),
    ])?;
    let file = t.write(&ctx.out_dir, "arb_step.csv")?;
    writeln!(out, "wrote {}", file.display())?;

    if let Some(config) = trace {
        let (_, steps) = run_trace(config, &config.policy, 0)?;
        let mut t = Table::new(
            &ctx.metadata,
            &[
                "step",
                "p_cex",
                "spot_before",
                "spot_after",
                "executed",
                "direction",
                "flashloan",
                "arb_profit",
                "fee",
            ],
        )?;
        for s in &steps {
            t.row([
                s.step.to_string(),
                num(s.p_cex),
                num(s.spot_before),
                num(s.spot_after),
                s.executed.to_string(),
                direction_name(s.direction).to_string(),
                num(s.flashloan),
                num(s.arb_profit),
                num(s.fee_revenue),
            ])?;
        }
        let file = t.write(&ctx.out_dir, "arb_trace.csv")?;
        writeln!(out, "wrote {}", file.display())?;
        if ctx.plot {
            let plot = Plot {
                title: "venue and pool prices".into(),
                x_label: "step".into(),
                y_label: "price".into(),
                log_x: false,
                log_y: false,
                series: vec![
                    Series::new(
                        "venue",
                        steps
                            .iter()
                            .map(|s| (s.step as f64, s.p_cex, 0.0))
                            .collect(),
                    )
                    .joined(),
                    Series::new(
                        "pool",
                        steps
                            .iter()
                            .map(|s| (s.step as f64, s.spot_after, 0.0))
                            .collect(),
                    )
                    .joined(),
                ],
            };
            write_svg(ctx, "arb_trace.svg", &plot, out)?;
        }
    }
    Ok(())
}

fn direction_name(d: Option<arbsim_core::SwapDirection>) -> &'static str {
    match d {
        Some(arbsim_core::SwapDirection::BInAOut) => "b_in_a_out",
        Some(arbsim_core::SwapDirection::AInBOut) => "a_in_b_out",
        None => "none",
    }
}

#[derive(serde::Serialize)]
struct TaggedRun<'a> {
    fee: f64,
    #[serde(flatten)]
    run: &'a RunResult,
}

fn fee_sweep_output(ctx: &Context, config: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    let mut runs = Vec::new();
    let report = run_sweep_with(config, |fee, r| {
        if ctx.jsonl {
            runs.push((fee, *r));
        }
    })?;
    let mut t = Table::new(
        &ctx.metadata,
        &[
            "fee",
            "mean_fee_a",
            "se_fee_a",
            "mean_fee_b",
            "se_fee_b",
            "exec_frequency",
            "se_frequency",
            "mean_arb_profit",
            "se_arb_profit",
        ],
    )?;
    for r in &report.rows {
        t.row([
            num(r.fee),
            num(r.mean_fee_a),
            num(r.se_fee_a),
            num(r.mean_fee_b),
            num(r.se_fee_b),
            num(r.exec_frequency),
            num(r.se_frequency),
            num(r.mean_arb_profit),
            num(r.se_arb_profit),
        ])?;
    }
    let file = t.write(&ctx.out_dir, "fee_sweep.csv")?;
    writeln!(out, "wrote {}", file.display())?;
    if ctx.jsonl {
        let bytes = json_lines(runs.iter().map(|(fee, run)| TaggedRun { fee: *fee, run }))?;
        let file = write_atomic(&ctx.out_dir, "fee_sweep_runs.jsonl", &bytes)?;
        writeln!(out, "wrote {}", file.display())?;
    }
    match frequency_scaling(&report) {
        Ok(fit) => writeln!(
            out,
            "frequency exponent {} r_squared {}",
            num(fit.exponent),
            num(fit.r_squared)
        )?,
        Err(e) => writeln!(out, "no frequency fit: {e}")?,
    }
    if ctx.plot {
        let revenue = Plot {
            title: "fee revenue per run".into(),
            x_label: "fee".into(),
            y_label: "accrued fees".into(),
            log_x: false,
            log_y: false,
            series: vec![
                Series::new(
                    "token A",
                    report
                        .rows
                        .iter()
                        .map(|r| (r.fee, r.mean_fee_a, r.se_fee_a))
                        .collect(),
                ),
                Series::new(
                    "token B",
                    report
                        .rows
                        .iter()
                        .map(|r| (r.fee, r.mean_fee_b, r.se_fee_b))
                        .collect(),
                ),
            ],
        };
        write_svg(ctx, "fee_sweep.svg", &revenue, out)?;
        let freq = Plot {
            title: "arbitrage frequency".into(),
            x_label: "fee".into(),
            y_label: "executed / attempts".into(),
            log_x: true,
            log_y: true,
            series: vec![Series::new(
                "frequency",
                report
                    .rows
                    .iter()
                    .map(|r| (r.fee, r.exec_frequency, r.se_frequency))
                    .collect(),
            )],
        };
        write_svg(ctx, "fee_sweep_frequency.svg", &freq, out)?;
    }
    Ok(())
}

fn policy_sim_output(ctx: &Context, config: &ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    let runs = run_ensemble(config, &config.policy)?;
    let mut t = Table::new(
        &ctx.metadata,
        &[
            "run",
            "fee_a",
            "fee_b",
            "n_attempts",
            "n_executed",
            "final_spot",
            "final_cex",
            "arb_profit_a",
            "arb_profit_b",
            "arb_profit_total",
        ],
    )?;
    for r in &runs {
        t.row([
            r.run_index.to_string(),
            num(r.fee_a),
            num(r.fee_b),
            r.n_attempts.to_string(),
            r.n_executed.to_string(),
            num(r.final_spot),
            num(r.final_cex),
            num(r.arb_profit_a),
            num(r.arb_profit_b),
            num(r.arb_profit_total),
        ])?;
    }
    let file = t.write(&ctx.out_dir, "policy_sim.csv")?;
    writeln!(out, "wrote {}", file.display())?;
    if ctx.jsonl {
        let file = write_atomic(&ctx.out_dir, "policy_sim_runs.jsonl", &json_lines(&runs)?)?;
        writeln!(out, "wrote {}", file.display())?;
    }
    let row = experiments::SweepRow::from_runs(f64::NAN, &runs)?;
    let lvr = lvr_accounting(&runs)?;
    writeln!(out, "policy {}", config.policy.name())?;
    writeln!(
        out,
        "mean_fee_a {} +- {}",
        num(row.mean_fee_a),
        num(row.se_fee_a)
    )?;
    writeln!(
        out,
        "mean_fee_b {} +- {}",
        num(row.mean_fee_b),
        num(row.se_fee_b)
    )?;
    writeln!(
        out,
        "exec_frequency {} +- {}",
        num(row.exec_frequency),
        num(row.se_frequency)
    )?;
    writeln!(out, "mean_arb_profit {}", num(lvr.mean_arb_profit))?;
    match lvr.retention_fraction {
        Some(r) => writeln!(out, "retention {}", num(r))?,
        None => writeln!(out, "retention undefined (no activity)")?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing() {
        assert_eq!(spaced(1.0, 2.0, 3, false), vec![1.0, 1.5, 2.0]);
        let g = spaced(0.1, 1.0, 3, true);
        assert!((g[1] - 0.1f64.sqrt()).abs() < 1e-15);
        assert!(spaced(1.0, 2.0, 0, true).is_empty());
    }
}
