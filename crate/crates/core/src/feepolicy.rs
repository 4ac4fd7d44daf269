//! Fee selection: the revenue-optimal static fee and a directional
//! adaptive policy.
//!
//! For a single arbitrage at mispricing `α` the pool earns
//! `R(f) = f·ΔFL_opt(α, f)`. Its maximizer satisfies
//! `α·(1 - f)·(1 - f/2)² = 1` and is close to `√α - 1` for small
//! mispricing, where the pool collects about twice what the arbitrageur
//! keeps.

use serde::{Deserialize, Serialize};

use crate::arbitrage::{optimal_flashloan, optimal_profit};
use crate::error::{ensure_fee, ensure_finite, ensure_positive, invalid, Result};

/// Tuning of the directional adaptive policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    pub base_fee: f64,
    /// Fee shift per unit of smoothed per-step return.
    pub drift_gain: f64,
    /// Number of updates after which an observation's weight halves.
    pub halflife: f64,
    pub min_fee: f64,
    pub max_fee: f64,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self {
            base_fee: 0.003,
            drift_gain: 10.0,
            halflife: 50.0,
            min_fee: 0.0005,
            max_fee: 0.02,
        }
    }
}

impl AdaptiveParams {
    /// Per-update decay `λ = 2^(-1/halflife)`.
    pub fn decay(&self) -> f64 {
        (-std::f64::consts::LN_2 / self.halflife).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeePolicy {
    StaticSymmetric { fee: f64 },
    StaticAsymmetric { f_b_to_a: f64, f_a_to_b: f64 },
    DirectionalAdaptive(AdaptiveParams),
}

impl Default for FeePolicy {
    fn default() -> Self {
        Self::StaticSymmetric { fee: 0.003 }
    }
}

impl FeePolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::StaticSymmetric { fee } => ensure_fee("fee", fee),
            Self::StaticAsymmetric { f_b_to_a, f_a_to_b } => {
                ensure_fee("f_b_to_a", f_b_to_a)?;
                ensure_fee("f_a_to_b", f_a_to_b)
            }
            Self::DirectionalAdaptive(p) => {
                ensure_fee("base_fee", p.base_fee)?;
                ensure_finite("drift_gain", p.drift_gain)?;
                ensure_positive("halflife", p.halflife)?;
                ensure_fee("min_fee", p.min_fee)?;
                ensure_fee("max_fee", p.max_fee)?;
                if p.min_fee > p.max_fee {
                    return Err(invalid(
                        "min_fee",
                        format!("min_fee {} exceeds max_fee {}", p.min_fee, p.max_fee),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Short label used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Self::StaticSymmetric { .. } => "static_symmetric",
            Self::StaticAsymmetric { .. } => "static_asymmetric",
            Self::DirectionalAdaptive(_) => "directional_adaptive",
        }
    }
}

/// Mutable per-run state of a policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    pub ewma_return: f64,
    /// Current `(f_b_to_a, f_a_to_b)`.
    pub last_fees: (f64, f64),
}

impl PolicyState {
    pub fn new(policy: &FeePolicy) -> Self {
        let mut state = Self {
            ewma_return: 0.0,
            last_fees: (0.0, 0.0),
        };
        state.last_fees = policy_fees(policy, &state);
        state
    }
}

/// Fees `(f_b_to_a, f_a_to_b)` the policy charges in `state`.
///
/// The adaptive policy raises the fee on the side an upward drift makes
/// toxic (B in, A out) and lowers the other by the same amount.
pub fn policy_fees(policy: &FeePolicy, state: &PolicyState) -> (f64, f64) {
    match *policy {
        FeePolicy::StaticSymmetric { fee } => (fee, fee),
        FeePolicy::StaticAsymmetric { f_b_to_a, f_a_to_b } => (f_b_to_a, f_a_to_b),
        FeePolicy::DirectionalAdaptive(p) => {
            let shift = p.drift_gain * state.ewma_return;
            let clamp = |f: f64| f.clamp(p.min_fee, p.max_fee);
            (clamp(p.base_fee + shift), clamp(p.base_fee - shift))
        }
    }
}

/// Folds one observed per-step return into the state.
pub fn policy_update(policy: &FeePolicy, state: &PolicyState, observed_return: f64) -> PolicyState {
    let ewma_return = match policy {
        FeePolicy::DirectionalAdaptive(p) => {
            let lambda = p.decay();
            lambda * state.ewma_return + (1.0 - lambda) * observed_return
        }
        _ => state.ewma_return,
    };
    let mut next = PolicyState {
        ewma_return,
        last_fees: state.last_fees,
    };
    next.last_fees = policy_fees(policy, &next);
    next
}

/// `√α - 1`.
pub fn optimal_fee_approx(alpha: f64) -> Result<f64> {
    ensure_finite("alpha", alpha)?;
    if alpha < 1.0 {
        return Err(invalid("alpha", format!("must be >= 1, got {alpha}")));
    }
    Ok((alpha - 1.0) / (alpha.sqrt() + 1.0))
}

/// Pool revenue `f·ΔFL_opt(α, f)` of a single optimal arbitrage.
pub fn fee_revenue(alpha: f64, fee: f64, x_b: f64) -> Result<f64> {
    Ok(fee * optimal_flashloan(alpha, fee, 0.0, x_b)?.amount)
}

/// Fee maximizing [`fee_revenue`] over `(0, 1 - 1/α)`.
///
/// `dR/df` has the sign of `√(α(1-f))·(1 - f/2) - 1`, which decreases
/// strictly across the interval, so the maximizer is found by bisection on
/// that sign. The result does not depend on `x_b`, which only scales `R`.
pub fn optimal_fee_exact(alpha: f64, x_b: f64) -> Result<f64> {
    ensure_finite("alpha", alpha)?;
    ensure_positive("x_b", x_b)?;
    if alpha <= 1.0 {
        return Err(invalid("alpha", format!("must be > 1, got {alpha}")));
    }
    let slope_sign = |f: f64| (alpha * (1.0 - f)).sqrt() * (1.0 - 0.5 * f) - 1.0;
    let (mut lo, mut hi) = (0.0, (alpha - 1.0) / alpha);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope_sign(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Split of one optimal arbitrage's value between pool and arbitrageur.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RevenueSplit {
    pub amm_revenue: f64,
    pub arb_profit: f64,
    /// `amm_revenue / arb_profit`; `None` when no arbitrage is profitable.
    pub ratio: Option<f64>,
    /// `amm_revenue / (amm_revenue + arb_profit)`; `None` likewise.
    pub retention: Option<f64>,
}

pub fn revenue_split(alpha: f64, fee: f64, x_b: f64) -> Result<RevenueSplit> {
    let size = optimal_flashloan(alpha, fee, 0.0, x_b)?;
    let arb_profit = optimal_profit(alpha, fee, 0.0, x_b)?;
    let amm_revenue = fee * size.amount;
    let defined = size.profitable && arb_profit > 0.0;
    Ok(RevenueSplit {
        amm_revenue,
        arb_profit,
        ratio: defined.then(|| amm_revenue / arb_profit),
        retention: defined.then(|| amm_revenue / (amm_revenue + arb_profit)),
    })
}
