//! Constant-product market maker `x_a · x_b = L²`.
//!
//! Prices are quoted in token B per token A. Swap fees are charged on the
//! input side and credited to a [`FeeLedger`] that lives outside the
//! reserves, so swaps conserve `L`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_fee, ensure_non_negative, ensure_positive, Result};

/// One of the two pool tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Token {
    A,
    B,
}

/// Swap direction, named by the token that enters the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SwapDirection {
    /// B enters, A leaves. Raises the spot price.
    BInAOut,
    /// A enters, B leaves. Lowers the spot price.
    AInBOut,
}

impl SwapDirection {
    pub fn input(self) -> Token {
        match self {
            Self::BInAOut => Token::B,
            Self::AInBOut => Token::A,
        }
    }

    pub fn output(self) -> Token {
        match self {
            Self::BInAOut => Token::A,
            Self::AInBOut => Token::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolState {
    x_a: f64,
    x_b: f64,
}

impl PoolState {
    pub fn new(x_a: f64, x_b: f64) -> Result<Self> {
        ensure_positive("x_a", x_a)?;
        ensure_positive("x_b", x_b)?;
        Ok(Self { x_a, x_b })
    }

    pub fn x_a(&self) -> f64 {
        self.x_a
    }

    pub fn x_b(&self) -> f64 {
        self.x_b
    }

    pub fn reserve(&self, token: Token) -> f64 {
        match token {
            Token::A => self.x_a,
            Token::B => self.x_b,
        }
    }

    /// `L = √(x_a · x_b)`.
    pub fn liquidity(&self) -> f64 {
        self.invariant().sqrt()
    }

    /// `L² = x_a · x_b`.
    pub fn invariant(&self) -> f64 {
        self.x_a * self.x_b
    }

    /// Marginal price `x_b / x_a`.
    pub fn spot_price(&self) -> f64 {
        self.x_b / self.x_a
    }

    /// The same pool with the roles of A and B exchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            x_a: self.x_b,
            x_b: self.x_a,
        }
    }

    /// Output of a fee-free swap of `net_in` tokens in `direction`.
    pub fn quote(&self, direction: SwapDirection, net_in: f64) -> Result<f64> {
        ensure_non_negative("net_in", net_in)?;
        let (r_in, r_out) = self.in_out(direction);
        Ok(r_out * net_in / (r_in + net_in))
    }

    /// A tokens received for `net_in` B tokens: `x_a·ΔB / (x_b + ΔB)`.
    pub fn quote_b_in(&self, net_in: f64) -> Result<f64> {
        self.quote(SwapDirection::BInAOut, net_in)
    }

    /// B tokens received for `net_in` A tokens: `x_b·ΔA / (x_a + ΔA)`.
    pub fn quote_a_in(&self, net_in: f64) -> Result<f64> {
        self.quote(SwapDirection::AInBOut, net_in)
    }

    /// Spot price after a hypothetical fee-free swap of `net_in`.
    ///
    /// `p_s·(1 + ΔB/x_b)²` for B in and `p_s / (1 + ΔA/x_a)²` for A in.
    pub fn post_swap_spot(&self, direction: SwapDirection, net_in: f64) -> Result<f64> {
        ensure_non_negative("net_in", net_in)?;
        let p = self.spot_price();
        Ok(match direction {
            SwapDirection::BInAOut => p * (1.0 + net_in / self.x_b).powi(2),
            SwapDirection::AInBOut => p / (1.0 + net_in / self.x_a).powi(2),
        })
    }

    fn in_out(&self, direction: SwapDirection) -> (f64, f64) {
        match direction {
            SwapDirection::BInAOut => (self.x_b, self.x_a),
            SwapDirection::AInBOut => (self.x_a, self.x_b),
        }
    }

    /// Moves `net_in` into the pool; the output reserve is set from the
    /// invariant so that repeated swaps do not drift off the curve.
    fn apply(&mut self, direction: SwapDirection, net_in: f64) {
        let (r_in, r_out) = self.in_out(direction);
        let new_in = r_in + net_in;
        let new_out = r_out * r_in / new_in;
        match direction {
            SwapDirection::BInAOut => {
                self.x_b = new_in;
                self.x_a = new_out;
            }
            SwapDirection::AInBOut => {
                self.x_a = new_in;
                self.x_b = new_out;
            }
        }
    }
}

/// Swap fees per direction plus the flashloan fee and a fixed transaction cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeeSchedule {
    /// Fee on B-in swaps.
    pub f_b_to_a: f64,
    /// Fee on A-in swaps.
    pub f_a_to_b: f64,
    /// Flashloan fee, as a fraction of the amount borrowed.
    pub f_fl: f64,
    /// Fixed cost per arbitrage cycle, in token B.
    pub txn: f64,
}

impl FeeSchedule {
    pub fn symmetric(fee: f64) -> Self {
        Self::asymmetric(fee, fee)
    }

    pub fn asymmetric(f_b_to_a: f64, f_a_to_b: f64) -> Self {
        Self {
            f_b_to_a,
            f_a_to_b,
            f_fl: 0.0,
            txn: 0.0,
        }
    }

    pub fn with_flashloan_fee(mut self, f_fl: f64) -> Self {
        self.f_fl = f_fl;
        self
    }

    pub fn with_txn(mut self, txn: f64) -> Self {
        self.txn = txn;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_fee("f_b_to_a", self.f_b_to_a)?;
        ensure_fee("f_a_to_b", self.f_a_to_b)?;
        ensure_non_negative("f_fl", self.f_fl)?;
        ensure_non_negative("txn", self.txn)
    }

    pub fn swap_fee(&self, direction: SwapDirection) -> f64 {
        match direction {
            SwapDirection::BInAOut => self.f_b_to_a,
            SwapDirection::AInBOut => self.f_a_to_b,
        }
    }

    /// The schedule seen from a pool whose tokens are exchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            f_b_to_a: self.f_a_to_b,
            f_a_to_b: self.f_b_to_a,
            ..*self
        }
    }
}

/// Fees accrued by the pool, per token.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeeLedger {
    pub accrued_a: f64,
    pub accrued_b: f64,
}

impl FeeLedger {
    pub fn credit(&mut self, token: Token, amount: f64) {
        debug_assert!(amount >= 0.0);
        match token {
            Token::A => self.accrued_a += amount,
            Token::B => self.accrued_b += amount,
        }
    }

    pub fn accrued(&self, token: Token) -> f64 {
        match token {
            Token::A => self.accrued_a,
            Token::B => self.accrued_b,
        }
    }

    /// Total value in token B at price `p` (B per A).
    pub fn value_in_b(&self, p: f64) -> f64 {
        self.accrued_b + self.accrued_a * p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwapReceipt {
    pub direction: SwapDirection,
    pub amount_in_gross: f64,
    pub fee_taken: f64,
    pub amount_in_net: f64,
    pub amount_out: f64,
    /// Prices in B per A.
    pub spot_before: f64,
    pub effective_price: f64,
    pub spot_after: f64,
}

/// Executes a swap of `amount_in_gross` input tokens.
///
/// The fee `amount_in_gross · f` goes to `ledger`; the remainder is swapped.
/// On error neither `pool` nor `ledger` is touched.
pub fn execute_swap(
    pool: &mut PoolState,
    ledger: &mut FeeLedger,
    fees: &FeeSchedule,
    direction: SwapDirection,
    amount_in_gross: f64,
) -> Result<SwapReceipt> {
    ensure_non_negative("amount_in_gross", amount_in_gross)?;
    let fee = fees.swap_fee(direction);
    ensure_fee("swap fee", fee)?;

    let spot_before = pool.spot_price();
    let fee_taken = amount_in_gross * fee;
    let amount_in_net = amount_in_gross - fee_taken;
    let amount_out = pool.quote(direction, amount_in_net)?;
    let effective_price = if amount_in_net > 0.0 {
        match direction {
            SwapDirection::BInAOut => amount_in_net / amount_out,
            SwapDirection::AInBOut => amount_out / amount_in_net,
        }
    } else {
        spot_before
    };

    if amount_in_net > 0.0 {
        pool.apply(direction, amount_in_net);
    }
    if fee_taken > 0.0 {
        ledger.credit(direction.input(), fee_taken);
    }
    Ok(SwapReceipt {
        direction,
        amount_in_gross,
        fee_taken,
        amount_in_net,
        amount_out,
        spot_before,
        effective_price,
        spot_after: pool.spot_price(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pool(x_a: f64, x_b: f64) -> PoolState {
        PoolState::new(x_a, x_b).unwrap()
    }

    #[test]
    fn liquidity_and_spot() {
        let p = pool(15000.0, 15000.0);
        assert_eq!(p.liquidity(), 15000.0);
        assert_eq!(p.spot_price(), 1.0);
        assert_eq!(pool(1.0, 1.0).liquidity(), 1.0);
        assert_eq!(pool(10000.0, 22500.0).liquidity(), 15000.0);
        assert_eq!(pool(10000.0, 20000.0).spot_price(), 2.0);
    }

    #[test]
    fn rejects_non_positive_reserves() {
        assert!(PoolState::new(0.0, 1.0).is_err());
        assert!(PoolState::new(1.0, -1.0).is_err());
        assert!(PoolState::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn quotes() {
        let p = pool(15000.0, 15000.0);
        assert_eq!(p.quote_b_in(0.0).unwrap(), 0.0);
        assert_eq!(p.quote_b_in(15000.0).unwrap(), 7500.0);
        let out = p.quote_b_in(150.0).unwrap();
        assert_relative_eq!(out, 15000.0 * 150.0 / 15150.0, max_relative = 1e-15);
        assert_relative_eq!(out, 148.514_851_485_148_5, max_relative = 1e-12);
        assert_relative_eq!(
            (15000.0 - out) * 15150.0,
            p.invariant(),
            max_relative = 1e-15
        );
        assert!(p.quote_b_in(-1.0).is_err());
        assert!(p.quote_a_in(-1.0).is_err());
    }

    #[test]
    fn post_swap_spot_examples() {
        let p = pool(10000.0, 20000.0);
        assert_eq!(p.post_swap_spot(SwapDirection::AInBOut, 0.0).unwrap(), 2.0);
        assert_relative_eq!(
            p.post_swap_spot(SwapDirection::AInBOut, 10000.0).unwrap(),
            0.5
        );
        let alpha: f64 = 1.02;
        let net = 20000.0 * (alpha.sqrt() - 1.0);
        let predicted = p.post_swap_spot(SwapDirection::BInAOut, net).unwrap();
        assert_relative_eq!(predicted, alpha * 2.0, max_relative = 1e-14);
        let mut q = p;
        execute_swap(
            &mut q,
            &mut FeeLedger::default(),
            &FeeSchedule::symmetric(0.0),
            SwapDirection::BInAOut,
            net,
        )
        .unwrap();
        assert_relative_eq!(q.spot_price(), predicted, max_relative = 1e-14);
        assert!(p.post_swap_spot(SwapDirection::BInAOut, -1.0).is_err());
    }

    #[test]
    fn spot_quarter_after_doubling_a() {
        let mut p = pool(15000.0, 15000.0);
        execute_swap(
            &mut p,
            &mut FeeLedger::default(),
            &FeeSchedule::symmetric(0.0),
            SwapDirection::AInBOut,
            15000.0,
        )
        .unwrap();
        assert_relative_eq!(p.spot_price(), 0.25, max_relative = 1e-15);
    }

    #[test]
    fn zero_swap_is_a_no_op() {
        let mut p = pool(15000.0, 15000.0);
        let mut l = FeeLedger::default();
        let r = execute_swap(
            &mut p,
            &mut l,
            &FeeSchedule::symmetric(0.005),
            SwapDirection::BInAOut,
            0.0,
        )
        .unwrap();
        assert_eq!(p, pool(15000.0, 15000.0));
        assert_eq!(l, FeeLedger::default());
        assert_eq!(r.amount_out, 0.0);
        assert_eq!(r.spot_after, r.spot_before);
    }

    #[test]
    fn fee_is_taken_on_input_and_kept_out_of_reserves() {
        let mut p = pool(15000.0, 15000.0);
        let mut l = FeeLedger::default();
        let r = execute_swap(
            &mut p,
            &mut l,
            &FeeSchedule::symmetric(0.005),
            SwapDirection::BInAOut,
            150.0,
        )
        .unwrap();
        assert_relative_eq!(r.fee_taken, 0.75, max_relative = 1e-14);
        assert_relative_eq!(r.amount_in_net, 149.25, max_relative = 1e-14);
        assert_relative_eq!(
            r.amount_out,
            15000.0 * 149.25 / 15149.25,
            max_relative = 1e-14
        );
        assert_relative_eq!(r.amount_out, 147.779_593_, max_relative = 1e-8);
        assert_relative_eq!(l.accrued_b, 0.75, max_relative = 1e-14);
        assert_eq!(l.accrued_a, 0.0);
        assert_relative_eq!(p.x_b(), 15149.25, max_relative = 1e-15);
        assert_relative_eq!(p.invariant(), 15000.0 * 15000.0, max_relative = 1e-15);
    }

    #[test]
    fn negative_amount_leaves_state_untouched() {
        let mut p = pool(100.0, 200.0);
        let mut l = FeeLedger::default();
        assert!(execute_swap(
            &mut p,
            &mut l,
            &FeeSchedule::symmetric(0.01),
            SwapDirection::AInBOut,
            -5.0
        )
        .is_err());
        assert_eq!(p, pool(100.0, 200.0));
        assert_eq!(l, FeeLedger::default());
    }

    #[test]
    fn fee_schedule_validation() {
        assert!(FeeSchedule::symmetric(1.0).validate().is_err());
        assert!(FeeSchedule::symmetric(-0.1).validate().is_err());
        assert!(FeeSchedule::symmetric(0.0)
            .with_flashloan_fee(-1.0)
            .validate()
            .is_err());
        assert!(FeeSchedule::symmetric(0.003)
            .with_txn(1.0)
            .validate()
            .is_ok());
    }

    fn direction() -> impl Strategy<Value = SwapDirection> {
        prop_oneof![Just(SwapDirection::BInAOut), Just(SwapDirection::AInBOut)]
    }

    proptest! {
        #[test]
        fn price_ordering(x_a in 1.0..1e7f64, x_b in 1.0..1e7f64, frac in 1e-6..10.0f64, dir in direction()) {
            let mut p = pool(x_a, x_b);
            let amount = frac * p.reserve(dir.input());
            let r = execute_swap(&mut p, &mut FeeLedger::default(), &FeeSchedule::symmetric(0.0), dir, amount).unwrap();
            match dir {
                SwapDirection::AInBOut => prop_assert!(r.spot_before > r.effective_price && r.effective_price > r.spot_after),
                SwapDirection::BInAOut => prop_assert!(r.spot_before < r.effective_price && r.effective_price < r.spot_after),
            }
        }

        #[test]
        fn swaps_conserve_tokens_and_invariant(
            x_a in 1.0..1e7f64, x_b in 1.0..1e7f64,
            trades in proptest::collection::vec((direction(), 0.0..2.0f64), 1..40),
            fee in 0.0..0.1f64,
        ) {
            let mut p = pool(x_a, x_b);
            let l0 = p.invariant();
            let mut ledger = FeeLedger::default();
            let fees = FeeSchedule::symmetric(fee);
            for (dir, frac) in trades {
                let before = p;
                let ledger_before = ledger;
                let amount = frac * p.reserve(dir.input());
                let r = execute_swap(&mut p, &mut ledger, &fees, dir, amount).unwrap();
                let (tin, tout) = (dir.input(), dir.output());
                // trader pays `amount` of the input token and receives `amount_out`
                let d_in = (p.reserve(tin) - before.reserve(tin)) + (ledger.accrued(tin) - ledger_before.accrued(tin)) - amount;
                let d_out = (p.reserve(tout) - before.reserve(tout)) + r.amount_out;
                let scale = before.reserve(tin).max(amount).max(ledger.accrued(tin));
                prop_assert!(d_in.abs() <= 1e-12 * scale);
                prop_assert!(d_out.abs() <= 1e-12 * before.reserve(tout));
                prop_assert!((r.amount_in_net - amount * (1.0 - fee)).abs() <= 1e-15 * amount.max(1.0));
            }
            prop_assert!((p.invariant() - l0).abs() / l0 < 1e-12);
        }

        #[test]
        fn round_trip_loses_only_to_fees(x_a in 1.0..1e7f64, x_b in 1.0..1e7f64, frac in 1e-6..1.0f64, fee in 1e-4..0.1f64) {
            let start = pool(x_a, x_b);
            let amount = frac * x_b;
            let mut p = start;
            let zero = FeeSchedule::symmetric(0.0);
            let there = execute_swap(&mut p, &mut FeeLedger::default(), &zero, SwapDirection::BInAOut, amount).unwrap();
            let back = execute_swap(&mut p, &mut FeeLedger::default(), &zero, SwapDirection::AInBOut, there.amount_out).unwrap();
            prop_assert!((back.amount_out - amount).abs() <= 1e-9 * amount);

            let mut p = start;
            let fees = FeeSchedule::symmetric(fee);
            let there = execute_swap(&mut p, &mut FeeLedger::default(), &fees, SwapDirection::BInAOut, amount).unwrap();
            let back = execute_swap(&mut p, &mut FeeLedger::default(), &fees, SwapDirection::AInBOut, there.amount_out).unwrap();
            prop_assert!(back.amount_out < amount);
        }
    }
}
