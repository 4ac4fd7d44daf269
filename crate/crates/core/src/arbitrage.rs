//! One arbitrage cycle against an infinite-liquidity external venue.
//!
//! When the venue price `p_cex` exceeds the pool's spot price the arbitrageur
//! borrows token B, swaps it into the pool for A and sells the A on the
//! venue; the profit is `p_cex·ΔA - ΔFL·(1 + f_fl) - txn`. The opposite
//! mispricing is the same cycle with the roles of A and B exchanged, so all
//! sizing below is written for the generic "input token" of the swap, with
//! `alpha` the venue value of the output token over its pool spot value.
//!
//! With `c = 1 - f` and `α_min = (1 + f_fl)/c`:
//!
//! * optimal size `ΔFL = x_in·(√(α/α_min) - 1)/c`, which for `f_fl = 0`
//!   is `x_in·√α_min·(√α - √α_min)`; profit `x_in·(√α - √α_min)²`;
//! * matching size `ΔFL = x_in·(√α - 1)/c`, profitable once
//!   `α > ((1 + f_fl)/c)²`.

use serde::Serialize;

use crate::amm::{execute_swap, FeeLedger, FeeSchedule, PoolState, SwapDirection, Token};
use crate::error::{ensure_fee, ensure_non_negative, ensure_positive, invalid, Result};
use crate::optimize::golden_section_max;

/// Relative margin by which `α` must clear its threshold. A pool left exactly
/// at the threshold by a previous cycle sits within a few ulps of it.
pub const THRESHOLD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArbStrategy {
    /// Profit-maximizing size; leaves the pool at the profitability threshold.
    #[default]
    Optimal,
    /// Size that moves the pool spot onto the venue price.
    MatchPrice,
}

impl std::str::FromStr for ArbStrategy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(Self::Optimal),
            "match" | "match_price" | "matching" => Ok(Self::MatchPrice),
            other => Err(invalid(
                "strategy",
                format!("expected `optimal` or `match`, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for ArbStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Optimal => "optimal",
            Self::MatchPrice => "match",
        })
    }
}

/// A flashloan size and whether executing it is profitable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArbSize {
    pub amount: f64,
    pub profitable: bool,
}

impl ArbSize {
    const NONE: Self = Self {
        amount: 0.0,
        profitable: false,
    };
}

/// `α = p_cex / spot`.
pub fn alpha(p_cex: f64, pool: &PoolState) -> Result<f64> {
    ensure_positive("p_cex", p_cex)?;
    Ok(p_cex / pool.spot_price())
}

/// Profitability threshold of `strategy` on `α`.
pub fn min_alpha(strategy: ArbStrategy, fee: f64, loan_fee: f64) -> Result<f64> {
    check_fees(fee, loan_fee)?;
    let optimal = (1.0 + loan_fee) / (1.0 - fee);
    Ok(match strategy {
        ArbStrategy::Optimal => optimal,
        ArbStrategy::MatchPrice => optimal * optimal,
    })
}

fn check_fees(fee: f64, loan_fee: f64) -> Result<()> {
    ensure_fee("fee", fee)?;
    ensure_non_negative("loan_fee", loan_fee)
}

fn check_sizing_inputs(alpha: f64, fee: f64, loan_fee: f64, reserve_in: f64) -> Result<()> {
    ensure_positive("alpha", alpha)?;
    check_fees(fee, loan_fee)?;
    ensure_positive("reserve_in", reserve_in)
}

/// `α/α_min - 1` for the optimal threshold, evaluated without cancelling
/// against 1 (`α - 1` is exact for `α` in `[0.5, 2]`).
fn optimal_excess(alpha: f64, fee: f64, loan_fee: f64) -> f64 {
    ((alpha - 1.0) - alpha * fee - loan_fee) / (1.0 + loan_fee)
}

/// `√α - 1` without cancellation.
fn sqrt_minus_one(alpha: f64) -> f64 {
    (alpha - 1.0) / (alpha.sqrt() + 1.0)
}

/// Closed-form profit-maximizing flashloan, in input-token units.
pub fn optimal_flashloan(alpha: f64, fee: f64, loan_fee: f64, reserve_in: f64) -> Result<ArbSize> {
    check_sizing_inputs(alpha, fee, loan_fee, reserve_in)?;
    let e = optimal_excess(alpha, fee, loan_fee);
    if e <= THRESHOLD_TOLERANCE {
        return Ok(ArbSize::NONE);
    }
    // √(1+e) - 1 = e / (√(1+e) + 1)
    let growth = e / ((1.0 + e).sqrt() + 1.0);
    Ok(ArbSize {
        amount: reserve_in * growth / (1.0 - fee),
        profitable: true,
    })
}

/// Profit of the optimal cycle, `x_in·(√α - √α_min)²`, before `txn`.
pub fn optimal_profit(alpha: f64, fee: f64, loan_fee: f64, reserve_in: f64) -> Result<f64> {
    check_sizing_inputs(alpha, fee, loan_fee, reserve_in)?;
    let e = optimal_excess(alpha, fee, loan_fee);
    if e <= THRESHOLD_TOLERANCE {
        return Ok(0.0);
    }
    let amin = (1.0 + loan_fee) / (1.0 - fee);
    let growth = e / ((1.0 + e).sqrt() + 1.0);
    Ok(reserve_in * amin * growth * growth)
}

/// Flashloan that moves the pool spot onto the venue price.
///
/// Not applicable (zero, unprofitable) for `α <= 1`; for `1 < α <= α_min`
/// the size is returned but flagged unprofitable.
pub fn matching_flashloan(alpha: f64, fee: f64, loan_fee: f64, reserve_in: f64) -> Result<ArbSize> {
    check_sizing_inputs(alpha, fee, loan_fee, reserve_in)?;
    if alpha <= 1.0 {
        return Ok(ArbSize::NONE);
    }
    let amount = reserve_in * sqrt_minus_one(alpha) / (1.0 - fee);
    Ok(ArbSize {
        amount,
        profitable: matching_excess(alpha, fee, loan_fee) > THRESHOLD_TOLERANCE,
    })
}

/// `√α·c/(1 + f_fl) - 1`; positive exactly when matching is profitable.
fn matching_excess(alpha: f64, fee: f64, loan_fee: f64) -> f64 {
    (sqrt_minus_one(alpha) - alpha.sqrt() * fee - loan_fee) / (1.0 + loan_fee)
}

/// Profit of the matching cycle, `x_in·(√α - 1)·(√α - (1 + f_fl)/c)`, before `txn`.
pub fn matching_profit(alpha: f64, fee: f64, loan_fee: f64, reserve_in: f64) -> Result<f64> {
    check_sizing_inputs(alpha, fee, loan_fee, reserve_in)?;
    if alpha <= 1.0 {
        return Ok(0.0);
    }
    let amin_sqrt = (1.0 + loan_fee) / (1.0 - fee);
    Ok(reserve_in * sqrt_minus_one(alpha) * amin_sqrt * matching_excess(alpha, fee, loan_fee))
}

/// Profit of borrowing `amount` input tokens and cycling them through the
/// pool, in input-token units and before `txn`.
///
/// Algebraically `α·c·u/(1 + c·u/x) - (1 + f_fl)·u`, arranged so that the
/// value is accurate relative to the profit itself rather than to the
/// traded amounts.
pub fn realized_profit(alpha: f64, fee: f64, loan_fee: f64, reserve_in: f64, amount: f64) -> f64 {
    let c = 1.0 - fee;
    let k = (alpha - 1.0) - alpha * fee - loan_fee;
    let impact = c * amount / reserve_in;
    amount * (k - (1.0 + loan_fee) * impact) / (1.0 + impact)
}

/// Derivative-free maximization of the realized profit over the flashloan
/// size, for whichever direction `p_cex` makes attractive.
///
/// Golden-section search (200-iteration cap) on a bracket grown from the
/// input reserve until it contains the maximum.
pub fn numeric_optimal_flashloan(
    pool: &PoolState,
    p_cex: f64,
    fees: &FeeSchedule,
) -> Result<ArbSize> {
    ensure_positive("p_cex", p_cex)?;
    fees.validate()?;
    let (direction, alpha_dir) = match attractive_direction(pool, p_cex) {
        Some(d) => d,
        None => return Ok(ArbSize::NONE),
    };
    let fee = fees.swap_fee(direction);
    let reserve_in = pool.reserve(direction.input());
    let objective = |u: f64| realized_profit(alpha_dir, fee, fees.f_fl, reserve_in, u);

    let mut hi = reserve_in;
    for _ in 0..64 {
        if objective(2.0 * hi) <= objective(hi) {
            break;
        }
        hi *= 2.0;
    }
    let best = golden_section_max(objective, 0.0, 2.0 * hi, 1e-12, 200);
    if best.value <= 0.0 || best.x <= 0.0 {
        return Ok(ArbSize::NONE);
    }
    Ok(ArbSize {
        amount: best.x,
        profitable: true,
    })
}

/// Direction in which the venue pays more than the pool, with the venue
/// value of the output token over its pool spot value (`> 1`).
///
/// Both directions evaluate the same expression on exchanged reserves and
/// inverted price, so mirroring a pool maps one branch onto the other
/// bit for bit.
fn attractive_direction(pool: &PoolState, p_cex: f64) -> Option<(SwapDirection, f64)> {
    let up = p_cex * pool.x_a() / pool.x_b();
    if up > 1.0 {
        return Some((SwapDirection::BInAOut, up));
    }
    let down = (1.0 / p_cex) * pool.x_b() / pool.x_a();
    if down > 1.0 {
        return Some((SwapDirection::AInBOut, down));
    }
    None
}

/// Accounting of one arbitrage attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArbOutcome {
    pub executed: bool,
    pub direction: Option<SwapDirection>,
    /// Amount borrowed, in the swap's input token.
    pub flashloan: f64,
    /// Trader profit in the borrowed token, net of all costs.
    pub arb_profit: f64,
    /// Fee credited to the pool ledger.
    pub fee_revenue: Option<(Token, f64)>,
    pub p_cex: f64,
    pub alpha_before: f64,
    pub alpha_after: f64,
    pub spot_after: f64,
}

impl ArbOutcome {
    /// Profit converted to token B at the venue price.
    pub fn arb_profit_in_b(&self) -> f64 {
        match self.direction {
            Some(SwapDirection::AInBOut) => self.arb_profit * self.p_cex,
            _ => self.arb_profit,
        }
    }
}

/// Attempts one arbitrage cycle at venue price `p_cex`.
///
/// Executes when the strategy's threshold is cleared and the realized
/// profit after `txn` is positive; otherwise `pool` and `ledger` are left
/// exactly as they were.
pub fn arbitrage_step(
    pool: &mut PoolState,
    ledger: &mut FeeLedger,
    p_cex: f64,
    strategy: ArbStrategy,
    fees: &FeeSchedule,
) -> Result<ArbOutcome> {
    ensure_positive("p_cex", p_cex)?;
    fees.validate()?;
    let alpha_before = p_cex / pool.spot_price();
    let skipped = ArbOutcome {
        executed: false,
        direction: None,
        flashloan: 0.0,
        arb_profit: 0.0,
        fee_revenue: None,
        p_cex,
        alpha_before,
        alpha_after: alpha_before,
        spot_after: pool.spot_price(),
    };
    let Some((direction, alpha_dir)) = attractive_direction(pool, p_cex) else {
        return Ok(skipped);
    };

    let fee = fees.swap_fee(direction);
    let reserve_in = pool.reserve(direction.input());
    let size = match strategy {
        ArbStrategy::Optimal => optimal_flashloan(alpha_dir, fee, fees.f_fl, reserve_in)?,
        ArbStrategy::MatchPrice => matching_flashloan(alpha_dir, fee, fees.f_fl, reserve_in)?,
    };
    if !size.profitable {
        return Ok(skipped);
    }

    // Venue price of one output token in input-token units.
    let (out_price, txn_in) = match direction {
        SwapDirection::BInAOut => (p_cex, fees.txn),
        SwapDirection::AInBOut => (1.0 / p_cex, fees.txn / p_cex),
    };
    let mut next_pool = *pool;
    let mut next_ledger = *ledger;
    let receipt = execute_swap(
        &mut next_pool,
        &mut next_ledger,
        fees,
        direction,
        size.amount,
    )?;
    let arb_profit = out_price * receipt.amount_out - size.amount * (1.0 + fees.f_fl) - txn_in;
    if arb_profit <= 0.0 {
        return Ok(skipped);
    }

    *pool = next_pool;
    *ledger = next_ledger;
    Ok(ArbOutcome {
        executed: true,
        direction: Some(direction),
        flashloan: size.amount,
        arb_profit,
        fee_revenue: Some((direction.input(), receipt.fee_taken)),
        p_cex,
        alpha_before,
        alpha_after: p_cex / receipt.spot_after,
        spot_after: receipt.spot_after,
    })
}
