//! Monte Carlo harness: a pool arbitraged once per step against a GBM venue
//! price, swept over fee settings.
//!
//! Run `i` of every configuration draws its venue path from
//! `derive_seed(master_seed, i)`, so all rows of a fee sweep see the same
//! paths. Runs execute in parallel and are reduced in run order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amm::{FeeLedger, FeeSchedule, PoolState, SwapDirection, Token};
use crate::arbitrage::{arbitrage_step, ArbStrategy};
use crate::error::{ensure_fee, ensure_non_negative, invalid, Error, Result};
use crate::feepolicy::{policy_update, FeePolicy, PolicyState};
use crate::hitting::{fit_power_law, PowerLawFit};
use crate::rng::derive_seed;
use crate::stats::MeanEstimate;
use crate::stochastic::{GbmParams, GbmProcess};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Venue price process; its `seed` is replaced per run.
    pub gbm: GbmParams,
    pub n_runs: usize,
    /// Initial `(x_a, x_b)`.
    pub pool_init: (f64, f64),
    pub strategy: ArbStrategy,
    /// Policy for single-policy runs; sweeps use a static fee per grid value.
    pub policy: FeePolicy,
    pub fee_grid: Vec<f64>,
    pub master_seed: u64,
    pub f_fl: f64,
    pub txn: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            gbm: GbmParams::new(1.0, 0.0, 0.001, 1000, 0),
            n_runs: 1000,
            pool_init: (15000.0, 15000.0),
            strategy: ArbStrategy::Optimal,
            policy: FeePolicy::default(),
            fee_grid: vec![
                0.001, 0.002, 0.003, 0.004, 0.005, 0.006, 0.007, 0.008, 0.009, 0.01,
            ],
            master_seed: 0,
            f_fl: 0.0,
            txn: 0.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.gbm.validate()?;
        if self.n_runs < 1 {
            return Err(invalid("n_runs", "must be >= 1"));
        }
        PoolState::new(self.pool_init.0, self.pool_init.1)?;
        self.policy.validate()?;
        for &f in &self.fee_grid {
            ensure_fee("fee_grid", f)?;
        }
        if self.fee_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("fee_grid", "must be strictly increasing"));
        }
        ensure_non_negative("f_fl", self.f_fl)?;
        ensure_non_negative("txn", self.txn)
    }

    fn run_gbm(&self, run_index: u64) -> GbmParams {
        self.gbm.with_seed(derive_seed(self.master_seed, run_index))
    }
}

/// Totals of one simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunResult {
    pub run_index: u64,
    pub fee_a: f64,
    pub fee_b: f64,
    pub n_attempts: u64,
    pub n_executed: u64,
    pub final_spot: f64,
    pub final_cex: f64,
    /// Profit of cycles that borrowed A, in A.
    pub arb_profit_a: f64,
    /// Profit of cycles that borrowed B, in B.
    pub arb_profit_b: f64,
    /// Both profit legs valued in B at the final venue price.
    pub arb_profit_total: f64,
}

impl RunResult {
    pub fn exec_frequency(&self) -> f64 {
        if self.n_attempts == 0 {
            0.0
        } else {
            self.n_executed as f64 / self.n_attempts as f64
        }
    }

    /// Fee income valued in B at the final venue price.
    pub fn fee_value_in_b(&self) -> f64 {
        self.fee_b + self.fee_a * self.final_cex
    }
}

/// One step of a recorded run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub p_cex: f64,
    pub spot_before: f64,
    pub spot_after: f64,
    pub f_b_to_a: f64,
    pub f_a_to_b: f64,
    pub executed: bool,
    pub direction: Option<SwapDirection>,
    pub flashloan: f64,
    pub arb_profit: f64,
    pub fee_revenue: f64,
}

/// Simulates run `run_index` under `policy`.
pub fn run_single(
    config: &ExperimentConfig,
    policy: &FeePolicy,
    run_index: u64,
) -> Result<RunResult> {
    simulate(config, policy, run_index, |_| {})
}

/// Like [`run_single`] but also records every step.
pub fn run_trace(
    config: &ExperimentConfig,
    policy: &FeePolicy,
    run_index: u64,
) -> Result<(RunResult, Vec<TraceStep>)> {
    let mut trace = Vec::with_capacity(config.gbm.n_steps);
    let result = simulate(config, policy, run_index, |s| trace.push(s))?;
    Ok((result, trace))
}

fn simulate(
    config: &ExperimentConfig,
    policy: &FeePolicy,
    run_index: u64,
    mut record: impl FnMut(TraceStep),
) -> Result<RunResult> {
    config.validate()?;
    policy.validate()?;
    let mut cex = GbmProcess::new(&config.run_gbm(run_index))?;
    let mut pool = PoolState::new(config.pool_init.0, config.pool_init.1)?;
    let mut ledger = FeeLedger::default();
    let mut state = PolicyState::new(policy);
    let (mut profit_a, mut profit_b) = (0.0, 0.0);
    let mut n_executed = 0;

    for step in 1..=config.gbm.n_steps {
        let previous = cex.price();
        let p_cex = cex.advance();
        let (f_b_to_a, f_a_to_b) = state.last_fees;
        let fees = FeeSchedule::asymmetric(f_b_to_a, f_a_to_b)
            .with_flashloan_fee(config.f_fl)
            .with_txn(config.txn);
        let spot_before = pool.spot_price();
        let out = arbitrage_step(&mut pool, &mut ledger, p_cex, config.strategy, &fees)?;
        if out.executed {
            n_executed += 1;
            match out.direction {
                Some(SwapDirection::AInBOut) => profit_a += out.arb_profit,
                _ => profit_b += out.arb_profit,
            }
        }
        record(TraceStep {
            step,
            p_cex,
            spot_before,
            spot_after: out.spot_after,
            f_b_to_a,
            f_a_to_b,
            executed: out.executed,
            direction: out.direction,
            flashloan: out.flashloan,
            arb_profit: out.arb_profit,
            fee_revenue: out.fee_revenue.map_or(0.0, |(_, f)| f),
        });
        state = policy_update(policy, &state, p_cex / previous - 1.0);
    }

    let final_cex = cex.price();
    Ok(RunResult {
        run_index,
        fee_a: ledger.accrued(Token::A),
        fee_b: ledger.accrued(Token::B),
        n_attempts: config.gbm.n_steps as u64,
        n_executed,
        final_spot: pool.spot_price(),
        final_cex,
        arb_profit_a: profit_a,
        arb_profit_b: profit_b,
        arb_profit_total: profit_b + profit_a * final_cex,
    })
}

/// All runs of `config` under `policy`, in run order.
pub fn run_ensemble(config: &ExperimentConfig, policy: &FeePolicy) -> Result<Vec<RunResult>> {
    config.validate()?;
    (0..config.n_runs as u64)
        .into_par_iter()
        .map(|i| run_single(config, policy, i))
        .collect()
}

/// Aggregates of one fee setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub fee: f64,
    pub mean_fee_a: f64,
    pub se_fee_a: f64,
    pub mean_fee_b: f64,
    pub se_fee_b: f64,
    pub exec_frequency: f64,
    pub se_frequency: f64,
    pub mean_arb_profit: f64,
    pub se_arb_profit: f64,
}

impl SweepRow {
    pub fn from_runs(fee: f64, runs: &[RunResult]) -> Result<Self> {
        let stat = |f: fn(&RunResult) -> f64| {
            MeanEstimate::from_samples(&runs.iter().map(f).collect::<Vec<_>>())
        };
        let a = stat(|r| r.fee_a)?;
        let b = stat(|r| r.fee_b)?;
        let freq = stat(RunResult::exec_frequency)?;
        let profit = stat(|r| r.arb_profit_total)?;
        Ok(Self {
            fee,
            mean_fee_a: a.mean,
            se_fee_a: a.std_error,
            mean_fee_b: b.mean,
            se_fee_b: b.std_error,
            exec_frequency: freq.mean,
            se_frequency: freq.std_error,
            mean_arb_profit: profit.mean,
            se_arb_profit: profit.std_error,
        })
    }

    pub fn fee_a(&self) -> MeanEstimate {
        MeanEstimate {
            mean: self.mean_fee_a,
            std_error: self.se_fee_a,
            n: 0,
        }
    }

    pub fn fee_b(&self) -> MeanEstimate {
        MeanEstimate {
            mean: self.mean_fee_b,
            std_error: self.se_fee_b,
            n: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub n_runs: usize,
    pub rows: Vec<SweepRow>,
}

/// Runs every grid fee as a static symmetric policy.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepReport> {
    run_sweep_with(config, |_, _| {})
}

/// [`run_sweep`] that also hands every run to `observe`, in grid then run
/// order.
pub fn run_sweep_with(
    config: &ExperimentConfig,
    mut observe: impl FnMut(f64, &RunResult),
) -> Result<SweepReport> {
    config.validate()?;
    if config.fee_grid.is_empty() {
        return Err(invalid("fee_grid", "must not be empty"));
    }
    let n = config.n_runs as u64;
    let results = config
        .fee_grid
        .iter()
        .flat_map(|&fee| (0..n).map(move |i| (fee, i)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(fee, i)| run_single(config, &FeePolicy::StaticSymmetric { fee }, i))
        .collect::<Result<Vec<_>>>()?;
    let rows = config
        .fee_grid
        .iter()
        .zip(results.chunks(config.n_runs))
        .map(|(&fee, runs)| {
            runs.iter().for_each(|r| observe(fee, r));
            SweepRow::from_runs(fee, runs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        n_runs: config.n_runs,
        rows,
    })
}

/// Log–log fit of execution frequency against fee over the rows with
/// positive fee and frequency.
pub fn frequency_scaling(report: &SweepReport) -> Result<PowerLawFit> {
    let points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|r| r.fee > 0.0 && r.exec_frequency > 0.0)
        .map(|r| (r.fee, r.exec_frequency))
        .collect();
    fit_power_law(&points)
}

/// Pool income against arbitrage profit over an ensemble, both in B at each
/// run's final venue price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LvrSummary {
    pub mean_arb_profit: f64,
    pub mean_amm_fee: f64,
    /// `fees / (fees + profit)`; `None` when nothing was traded.
    pub retention_fraction: Option<f64>,
}

pub fn lvr_accounting(runs: &[RunResult]) -> Result<LvrSummary> {
    if runs.is_empty() {
        return Err(Error::EmptyEnsemble("lvr accounting over zero runs"));
    }
    let n = runs.len() as f64;
    let mean_arb_profit = runs.iter().map(|r| r.arb_profit_total).sum::<f64>() / n;
    let mean_amm_fee = runs.iter().map(RunResult::fee_value_in_b).sum::<f64>() / n;
    let total = mean_amm_fee + mean_arb_profit;
    Ok(LvrSummary {
        mean_arb_profit,
        mean_amm_fee,
        retention_fraction: (total > 0.0).then(|| mean_amm_fee / total),
    })
}
