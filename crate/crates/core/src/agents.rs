//! Closed-form optimal orders for arbitrageurs and investors.
//!
//! An arbitrageur paying `x` of the input token (plus the fee) into a pool
//! with reserves `r_in`, `r_out` earns
//!
//! ```text
//! profit(x) = -v_in (1 + f) x + v_out (r_out - r_in r_out / (r_in + x))
//! ```
//!
//! at token values `v_in`, `v_out`. The first-order condition has a single
//! feasible root `x* = sqrt(v_out r_in r_out / ((1 + f) v_in)) - r_in`, which
//! is positive exactly when `v_out r_out > (1 + f) v_in r_in`.

use crate::error::{Error, Result};
use crate::pool::{Direction, PoolState, Token, DEPOSIT_TOLERANCE};

/// External parameters of one game instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    pub p_a: f64,
    pub p_b: f64,
    /// Investor's private-use premium on the token of its type.
    pub alpha: f64,
    /// Relative value jump of the shocked token at t=2.
    pub beta: f64,
    pub fee: f64,
    pub n_lps: usize,
    pub n_arbitrageurs: usize,
}

impl MarketParams {
    /// Unit prices, two LPs and two arbitrageurs.
    pub fn unit(alpha: f64, beta: f64, fee: f64) -> Self {
        MarketParams {
            p_a: 1.0,
            p_b: 1.0,
            alpha,
            beta,
            fee,
            n_lps: 2,
            n_arbitrageurs: 2,
        }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        MarketParams { beta, ..self }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        MarketParams { alpha, ..self }
    }

    pub fn with_fee(self, fee: f64) -> Self {
        MarketParams { fee, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.p_a.is_finite() && self.p_a > 0.0 && self.p_b.is_finite() && self.p_b > 0.0) {
            return bad(format!("prices must be positive, got ({}, {})", self.p_a, self.p_b));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("alpha must be nonnegative, got {}", self.alpha));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!("beta must be nonnegative, got {}", self.beta));
        }
        if !(self.fee.is_finite() && (0.0..1.0).contains(&self.fee)) {
            return bad(format!("fee must lie in [0, 1), got {}", self.fee));
        }
        if self.n_lps < 2 {
            return bad(format!("need at least two LPs, got {}", self.n_lps));
        }
        if self.n_arbitrageurs < 2 {
            return Err(Error::TooFewArbitrageurs(self.n_arbitrageurs));
        }
        Ok(())
    }

    pub fn price(&self, token: Token) -> f64 {
        match token {
            Token::A => self.p_a,
            Token::B => self.p_b,
        }
    }

    /// Token values after a `(1 + beta)` jump on `shocked`.
    pub fn shocked_prices(&self, shocked: Token) -> (f64, f64) {
        match shocked {
            Token::A => ((1.0 + self.beta) * self.p_a, self.p_b),
            Token::B => (self.p_a, (1.0 + self.beta) * self.p_b),
        }
    }
}

fn value_of(prices: (f64, f64), token: Token) -> f64 {
    match token {
        Token::A => prices.0,
        Token::B => prices.1,
    }
}

fn check_prices(prices: (f64, f64)) -> Result<()> {
    if prices.0.is_finite() && prices.0 > 0.0 && prices.1.is_finite() && prices.1 > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "prices must be positive, got {prices:?}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArbOrder {
    pub direction: Direction,
    /// Priced input amount; the arbitrageur also pays `fee * amount_in`.
    pub amount_in: f64,
    pub expected_profit: f64,
    pub gas_bid: f64,
    /// Token values `(v_a, v_b)` the order was optimised against.
    pub valuation: (f64, f64),
}

impl ArbOrder {
    pub fn with_gas_bid(self, gas_bid: f64) -> Self {
        ArbOrder { gas_bid, ..self }
    }

    /// Profit of this order's fixed size against `pool` at its valuation.
    pub fn profit_against(&self, pool: &PoolState) -> Result<f64> {
        arbitrage_profit(pool, self.direction, self.valuation, self.amount_in)
    }
}

/// Arbitrage objective for a given input size.
pub fn arbitrage_profit(
    pool: &PoolState,
    direction: Direction,
    values: (f64, f64),
    amount_in: f64,
) -> Result<f64> {
    let out = pool.quote_out(amount_in, direction)?;
    let v_in = value_of(values, direction.input());
    let v_out = value_of(values, direction.output());
    Ok(-v_in * (1.0 + pool.fee_rate()) * amount_in + v_out * out)
}

fn candidate(pool: &PoolState, direction: Direction, values: (f64, f64)) -> Result<Option<ArbOrder>> {
    let f = pool.fee_rate();
    let r_in = pool.reserve(direction.input());
    let r_out = pool.reserve(direction.output());
    let v_in = value_of(values, direction.input());
    let v_out = value_of(values, direction.output());
    // strict: at the threshold the optimal size is zero
    if v_out * r_out <= (1.0 + f) * v_in * r_in {
        return Ok(None);
    }
    let amount_in = (v_out * r_in * r_out / ((1.0 + f) * v_in)).sqrt() - r_in;
    if amount_in <= 0.0 {
        return Ok(None);
    }
    let expected_profit = arbitrage_profit(pool, direction, values, amount_in)?;
    if expected_profit <= 0.0 {
        return Ok(None);
    }
    Ok(Some(ArbOrder {
        direction,
        amount_in,
        expected_profit,
        gas_bid: 0.0,
        valuation: values,
    }))
}

/// The profit-maximising arbitrage order against `pool` at token values
/// `prices = (v_a, v_b)`, or `None` when neither direction is profitable.
pub fn optimal_arbitrage(pool: &PoolState, prices: (f64, f64)) -> Result<Option<ArbOrder>> {
    check_prices(prices)?;
    if pool.is_empty() {
        return Err(Error::NoLiquidity);
    }
    let forward = candidate(pool, Direction::AForB, prices)?;
    let backward = candidate(pool, Direction::BForA, prices)?;
    Ok(match (forward, backward) {
        (Some(a), Some(b)) => Some(if a.expected_profit >= b.expected_profit { a } else { b }),
        (a, b) => a.or(b),
    })
}

/// Smallest relative jump in the value of `shocked` above which buying it
/// from the pool becomes profitable, given pre-shock `prices`.
pub fn beta_one(pool: &PoolState, prices: (f64, f64), shocked: Token) -> Result<f64> {
    check_prices(prices)?;
    if pool.is_empty() {
        return Err(Error::NoLiquidity);
    }
    let other = shocked.other();
    Ok((1.0 + pool.fee_rate()) * pool.reserve(other) * value_of(prices, other)
        / (pool.reserve(shocked) * value_of(prices, shocked))
        - 1.0)
}

/// Optimal arbitrage profit in closed form for a pool with reserves
/// `(r_in, r_out)` and pre-shock prices `(p_in, p_out)` after a `(1 + beta)`
/// jump on the output token.
pub fn arb_profit_closed_form(
    reserves: (f64, f64),
    prices: (f64, f64),
    fee: f64,
    beta: f64,
) -> Result<f64> {
    let (r_in, r_out) = reserves;
    let (p_in, p_out) = prices;
    let beta1 = (1.0 + fee) * r_in * p_in / (r_out * p_out) - 1.0;
    if beta.is_nan() || beta <= beta1 {
        return Err(Error::NoArbitrageRegime { beta, beta1 });
    }
    let gap = ((1.0 + beta) * p_out * r_out).sqrt() - ((1.0 + fee) * p_in * r_in).sqrt();
    Ok(gap * gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InvestorType {
    TypeA,
    TypeB,
}

impl InvestorType {
    pub const ALL: [InvestorType; 2] = [InvestorType::TypeA, InvestorType::TypeB];

    /// The token this investor derives private use from.
    pub fn desired(self) -> Token {
        match self {
            InvestorType::TypeA => Token::A,
            InvestorType::TypeB => Token::B,
        }
    }

    pub fn label(self) -> &'static str {
        self.desired().label()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeOrder {
    pub investor_type: InvestorType,
    /// Amount of the desired token bought from the pool.
    pub amount_out_requested: f64,
    /// Priced input needed to buy it, before the fee.
    pub amount_in: f64,
    pub fee_paid: f64,
    /// Always zero: the investor's order is uncontested.
    pub gas_bid: f64,
}

impl TradeOrder {
    pub fn direction(&self) -> Direction {
        Direction::paying(self.investor_type.desired().other())
    }
}

/// The investor's utility-maximising purchase against a value-balanced pool,
/// `q* = (1 - sqrt((1 + f) / (1 + alpha))) * reserve_desired`. `None` when
/// `alpha <= f`.
pub fn investor_optimal_trade(
    pool: &PoolState,
    params: &MarketParams,
    investor: InvestorType,
) -> Result<Option<TradeOrder>> {
    if pool.is_empty() {
        return Err(Error::NoLiquidity);
    }
    let value_a = pool.reserve_a() * params.p_a;
    let value_b = pool.reserve_b() * params.p_b;
    if (value_a - value_b).abs() > DEPOSIT_TOLERANCE * value_a.max(value_b) {
        return Err(Error::UnbalancedPool { value_a, value_b });
    }
    let f = pool.fee_rate();
    if params.alpha <= f {
        return Ok(None);
    }
    let desired = investor.desired();
    let r_out = pool.reserve(desired);
    let r_in = pool.reserve(desired.other());
    let q = (1.0 - ((1.0 + f) / (1.0 + params.alpha)).sqrt()) * r_out;
    if q <= 0.0 {
        return Ok(None);
    }
    let amount_in = r_in * q / (r_out - q);
    Ok(Some(TradeOrder {
        investor_type: investor,
        amount_out_requested: q,
        amount_in,
        fee_paid: f * amount_in,
        gas_bid: 0.0,
    }))
}
