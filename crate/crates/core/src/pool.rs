//! Constant-product pool state machine.
//!
//! Every operation is a pure function of the current [`PoolState`] and returns
//! a new state, so a pool can be cloned freely and shared between workers.
//!
//! Swap fees are charged on top of the priced input: a trader who swaps
//! `amount_in` pays `amount_in * (1 + fee_rate)` of the input token, the curve
//! prices only `amount_in`, and the fee is booked according to the pool's
//! [`FeeRouting`].

use crate::error::{Error, Result};

/// Relative tolerance for the equal-value and equal-ratio deposit checks.
pub const DEPOSIT_TOLERANCE: f64 = 1e-9;

/// Share of every swap fee that stays with the liquidity providers. The rest
/// would go to the platform operator, which the model does not track.
pub const FEE_RETAINED_FRACTION: f64 = 1.0;

/// Where retained swap fees are booked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeeRouting {
    /// Fees are added to the input reserve and take part in later pricing.
    IntoReserves,
    /// Fees sit in a side balance owned by the LPs and are paid out only on
    /// withdrawal; the pricing reserves keep a fee-free constant product.
    HeldOutside,
}

impl FeeRouting {
    pub const ALL: [FeeRouting; 2] = [FeeRouting::IntoReserves, FeeRouting::HeldOutside];

    pub fn name(self) -> &'static str {
        match self {
            FeeRouting::IntoReserves => "into-reserves",
            FeeRouting::HeldOutside => "held-outside",
        }
    }
}

/// The routing under which the event-enumeration engine reproduces the
/// closed-form ex-ante LP payoff. Pinned by the calibration tests.
pub const CALIBRATED_FEE_ROUTING: FeeRouting = FeeRouting::IntoReserves;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    A,
    B,
}

impl Token {
    pub fn other(self) -> Token {
        match self {
            Token::A => Token::B,
            Token::B => Token::A,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Token::A => "A",
            Token::B => "B",
        }
    }
}

/// Swap direction, named input-for-output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    AForB,
    BForA,
}

impl Direction {
    /// The direction that pays in `token`.
    pub fn paying(token: Token) -> Direction {
        match token {
            Token::A => Direction::AForB,
            Token::B => Direction::BForA,
        }
    }

    pub fn input(self) -> Token {
        match self {
            Direction::AForB => Token::A,
            Direction::BForA => Token::B,
        }
    }

    pub fn output(self) -> Token {
        self.input().other()
    }

    pub fn reverse(self) -> Direction {
        Direction::paying(self.output())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolState {
    reserve_a: f64,
    reserve_b: f64,
    total_shares: f64,
    fee_rate: f64,
    fee_routing: FeeRouting,
    accrued_a: f64,
    accrued_b: f64,
}

/// Result of [`PoolState::execute_swap`].
#[derive(Debug, Clone, PartialEq)]
pub struct SwapOutcome {
    pub pool: PoolState,
    pub amount_out: f64,
    /// Fee in input-token units, `fee_rate * amount_in`.
    pub fee_paid: f64,
}

/// Result of [`PoolState::withdraw`].
#[derive(Debug, Clone, PartialEq)]
pub struct Withdrawal {
    pub pool: PoolState,
    pub amount_a: f64,
    pub amount_b: f64,
}

/// One liquidity provider's claim on the pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpAccount {
    pub shares: f64,
    pub deposit_fraction: f64,
}

fn check_amount(amount: f64) -> Result<f64> {
    if amount.is_finite() && amount >= 0.0 {
        Ok(amount)
    } else {
        Err(Error::InvalidAmount(amount))
    }
}

fn check_price(price: f64) -> Result<f64> {
    if price.is_finite() && price > 0.0 {
        Ok(price)
    } else {
        Err(Error::InvalidParams(format!("price must be positive, got {price}")))
    }
}

fn close(lhs: f64, rhs: f64, rel: f64) -> bool {
    (lhs - rhs).abs() <= rel * lhs.abs().max(rhs.abs())
}

impl PoolState {
    /// A pool with no reserves and no shares outstanding.
    pub fn empty(fee_rate: f64) -> Result<Self> {
        if !(fee_rate.is_finite() && (0.0..1.0).contains(&fee_rate)) {
            return Err(Error::InvalidParams(format!(
                "fee rate must lie in [0, 1), got {fee_rate}"
            )));
        }
        Ok(PoolState {
            reserve_a: 0.0,
            reserve_b: 0.0,
            total_shares: 0.0,
            fee_rate,
            fee_routing: CALIBRATED_FEE_ROUTING,
            accrued_a: 0.0,
            accrued_b: 0.0,
        })
    }

    /// A seeded pool with the given reserves and one share outstanding.
    pub fn with_reserves(reserve_a: f64, reserve_b: f64, fee_rate: f64) -> Result<Self> {
        let mut pool = Self::empty(fee_rate)?;
        let reserve_a = check_amount(reserve_a)?;
        let reserve_b = check_amount(reserve_b)?;
        if (reserve_a > 0.0) != (reserve_b > 0.0) {
            return Err(Error::InvalidParams(
                "reserves must be both zero or both positive".into(),
            ));
        }
        if reserve_a > 0.0 {
            pool.reserve_a = reserve_a;
            pool.reserve_b = reserve_b;
            pool.total_shares = 1.0;
        }
        Ok(pool)
    }

    pub fn with_fee_routing(mut self, routing: FeeRouting) -> Self {
        self.fee_routing = routing;
        self
    }

    pub fn reserve_a(&self) -> f64 {
        self.reserve_a
    }

    pub fn reserve_b(&self) -> f64 {
        self.reserve_b
    }

    pub fn reserve(&self, token: Token) -> f64 {
        match token {
            Token::A => self.reserve_a,
            Token::B => self.reserve_b,
        }
    }

    pub fn reserves(&self) -> (f64, f64) {
        (self.reserve_a, self.reserve_b)
    }

    pub fn total_shares(&self) -> f64 {
        self.total_shares
    }

    pub fn fee_rate(&self) -> f64 {
        self.fee_rate
    }

    pub fn fee_routing(&self) -> FeeRouting {
        self.fee_routing
    }

    /// Fees parked outside the pricing reserves (always zero under
    /// [`FeeRouting::IntoReserves`]).
    pub fn accrued_fees(&self, token: Token) -> f64 {
        match token {
            Token::A => self.accrued_a,
            Token::B => self.accrued_b,
        }
    }

    /// Everything the LPs collectively own in `token`.
    pub fn claimable(&self, token: Token) -> f64 {
        self.reserve(token) + self.accrued_fees(token)
    }

    pub fn product(&self) -> f64 {
        self.reserve_a * self.reserve_b
    }

    pub fn is_empty(&self) -> bool {
        !(self.reserve_a > 0.0 && self.reserve_b > 0.0)
    }

    /// Value of the LPs' total claim at the given prices.
    pub fn value(&self, p_a: f64, p_b: f64) -> f64 {
        self.claimable(Token::A) * p_a + self.claimable(Token::B) * p_b
    }

    fn reserve_mut(&mut self, token: Token) -> &mut f64 {
        match token {
            Token::A => &mut self.reserve_a,
            Token::B => &mut self.reserve_b,
        }
    }

    fn accrued_mut(&mut self, token: Token) -> &mut f64 {
        match token {
            Token::A => &mut self.accrued_a,
            Token::B => &mut self.accrued_b,
        }
    }

    /// Output amount for a fee-free constant-product trade of `amount_in`.
    pub fn quote_out(&self, amount_in: f64, direction: Direction) -> Result<f64> {
        let amount_in = check_amount(amount_in)?;
        if self.is_empty() {
            return Err(Error::NoLiquidity);
        }
        let r_in = self.reserve(direction.input());
        let r_out = self.reserve(direction.output());
        // r_out - r_in * r_out / (r_in + amount_in), without the cancellation
        Ok(r_out * amount_in / (r_in + amount_in))
    }

    pub fn execute_swap(&self, amount_in: f64, direction: Direction) -> Result<SwapOutcome> {
        let amount_out = self.quote_out(amount_in, direction)?;
        let r_out = self.reserve(direction.output());
        if amount_in > 0.0 && amount_out >= r_out {
            return Err(Error::PoolDrained {
                amount_out,
                reserve_out: r_out,
            });
        }
        let fee_paid = self.fee_rate * amount_in;
        let retained = fee_paid * FEE_RETAINED_FRACTION;
        let mut pool = self.clone();
        let input = direction.input();
        *pool.reserve_mut(input) += amount_in;
        match self.fee_routing {
            FeeRouting::IntoReserves => *pool.reserve_mut(input) += retained,
            FeeRouting::HeldOutside => *pool.accrued_mut(input) += retained,
        }
        *pool.reserve_mut(direction.output()) -= amount_out;
        Ok(SwapOutcome {
            pool,
            amount_out,
            fee_paid,
        })
    }

    /// Adds equal-value liquidity and mints shares pro rata to the existing
    /// reserves. The first deposit into an empty pool mints exactly one share.
    pub fn deposit(
        &self,
        amount_a: f64,
        amount_b: f64,
        p_a: f64,
        p_b: f64,
    ) -> Result<(PoolState, f64)> {
        let amount_a = check_amount(amount_a)?;
        let amount_b = check_amount(amount_b)?;
        let p_a = check_price(p_a)?;
        let p_b = check_price(p_b)?;
        if amount_a == 0.0 && amount_b == 0.0 {
            return Ok((self.clone(), 0.0));
        }
        let (value_a, value_b) = (amount_a * p_a, amount_b * p_b);
        if !close(value_a, value_b, DEPOSIT_TOLERANCE) {
            return Err(Error::ValueMismatch { value_a, value_b });
        }
        let mut pool = self.clone();
        let minted = if self.total_shares == 0.0 {
            1.0
        } else {
            if !close(
                amount_a * self.reserve_b,
                amount_b * self.reserve_a,
                DEPOSIT_TOLERANCE,
            ) {
                return Err(Error::RatioMismatch {
                    deposit: amount_a / amount_b,
                    reserves: self.reserve_a / self.reserve_b,
                });
            }
            self.total_shares * amount_a / self.reserve_a
        };
        pool.reserve_a += amount_a;
        pool.reserve_b += amount_b;
        pool.total_shares += minted;
        Ok((pool, minted))
    }

    /// Burns `shares` and pays out the matching fraction of reserves and of
    /// any fees held outside the reserves. Requests that overshoot the
    /// outstanding total by rounding noise (1e-12 relative) redeem everything.
    pub fn withdraw(&self, shares: f64) -> Result<Withdrawal> {
        let shares = check_amount(shares)?;
        if shares > self.total_shares * (1.0 + 1e-12) {
            return Err(Error::InsufficientShares {
                requested: shares,
                available: self.total_shares,
            });
        }
        if shares == 0.0 {
            return Ok(Withdrawal {
                pool: self.clone(),
                amount_a: 0.0,
                amount_b: 0.0,
            });
        }
        if shares >= self.total_shares {
            let pool = PoolState {
                reserve_a: 0.0,
                reserve_b: 0.0,
                total_shares: 0.0,
                accrued_a: 0.0,
                accrued_b: 0.0,
                ..self.clone()
            };
            return Ok(Withdrawal {
                pool,
                amount_a: self.claimable(Token::A),
                amount_b: self.claimable(Token::B),
            });
        }
        let fraction = shares / self.total_shares;
        let mut pool = self.clone();
        let mut paid = [0.0; 2];
        for (slot, token) in paid.iter_mut().zip([Token::A, Token::B]) {
            let from_reserve = fraction * self.reserve(token);
            let from_fees = fraction * self.accrued_fees(token);
            *pool.reserve_mut(token) -= from_reserve;
            *pool.accrued_mut(token) -= from_fees;
            *slot = from_reserve + from_fees;
        }
        pool.total_shares -= shares;
        Ok(Withdrawal {
            pool,
            amount_a: paid[0],
            amount_b: paid[1],
        })
    }

    /// Reserve ratio `reserve_a / reserve_b`, the marginal A paid per B received.
    pub fn spot_price(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::NoLiquidity);
        }
        Ok(self.reserve_a / self.reserve_b)
    }
}
