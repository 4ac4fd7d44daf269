//! Simulation of arbitrage between a constant-product AMM and an external
//! venue of unlimited depth.
//!
//! * [`stochastic`]: seeded random walks and geometric Brownian motion.
//! * [`hitting`]: first-passage times and their scaling with the threshold.
//! * [`amm`]: the pool, fee-aware swaps and the fee ledger.
//! * [`arbitrage`]: closed-form and numeric arbitrage sizing and execution.
//! * [`feepolicy`]: revenue-optimal fees and an adaptive directional policy.
//! * [`experiments`]: the Monte Carlo harness for fee sweeps.

pub mod amm;
pub mod arbitrage;
mod error;
pub mod experiments;
pub mod feepolicy;
pub mod hitting;
pub mod optimize;
pub mod rng;
pub mod stats;
pub mod stochastic;

pub use amm::{execute_swap, FeeLedger, FeeSchedule, PoolState, SwapDirection, SwapReceipt, Token};
pub use arbitrage::{arbitrage_step, ArbOutcome, ArbSize, ArbStrategy};
pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, RunResult, SweepReport, SweepRow};
pub use feepolicy::{AdaptiveParams, FeePolicy, PolicyState};
pub use hitting::{HittingEstimate, ThresholdSpec};
pub use stats::MeanEstimate;
pub use stochastic::{GbmParams, IncrementKind, PricePath, WalkParams};
