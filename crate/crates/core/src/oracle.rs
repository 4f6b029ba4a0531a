//! Naive reference routines used to check the closed forms.
//!
//! Everything here is direct search: grid scans with golden-section
//! refinement, bisection on a profitability predicate and plain sign scans.
//! The only model code touched is the pool's swap quote and, for the
//! threshold scan, the event-enumeration engine.

use crate::error::{Error, Result};
use crate::game::Game;
use crate::pool::{Direction, PoolState, Token};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub grid_points: usize,
    /// Golden-section stops once the bracket is this fraction of the
    /// searched interval.
    pub refinement_tolerance: f64,
    pub scan_cap: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { grid_points: 10_000, refinement_tolerance: 1e-10, scan_cap: 1e6 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 100 {
            return Err(Error::InvalidParams("oracle grid needs at least 100 points".into()));
        }
        if !(self.refinement_tolerance > 0.0 && self.scan_cap > 0.0) {
            return Err(Error::InvalidParams("oracle tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub argmax: f64,
    pub value: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn golden_section<F: Fn(f64) -> f64>(objective: &F, mut a: f64, mut b: f64, width: f64) -> Maximum {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > width {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = objective(d);
        }
    }
    if fc >= fd {
        Maximum { argmax: c, value: fc }
    } else {
        Maximum { argmax: d, value: fd }
    }
}

/// Maximises `objective` over `[lo, hi]` by a uniform grid followed by
/// golden-section refinement around the best grid cell.
pub fn maximize<F: Fn(f64) -> f64>(objective: F, lo: f64, hi: f64, config: &OracleConfig) -> Maximum {
    let n = config.grid_points;
    let h = (hi - lo) / n as f64;
    let mut best = Maximum { argmax: lo, value: objective(lo) };
    let mut best_index = 0;
    for i in 1..=n {
        let x = if i == n { hi } else { lo + h * i as f64 };
        let v = objective(x);
        if v > best.value {
            best = Maximum { argmax: x, value: v };
            best_index = i;
        }
    }
    let a = lo + h * best_index.saturating_sub(1) as f64;
    let b = (lo + h * (best_index + 1) as f64).min(hi);
    let refined = golden_section(&objective, a, b, config.refinement_tolerance * (hi - lo));
    if refined.value > best.value {
        refined
    } else {
        best
    }
}

/// Arbitrage payoff of paying `x` into the pool, valued at `values`.
pub fn arbitrage_objective(pool: &PoolState, direction: Direction, values: (f64, f64), x: f64) -> f64 {
    let (v_in, v_out) = match direction.input() {
        Token::A => (values.0, values.1),
        Token::B => (values.1, values.0),
    };
    let received = pool.quote_out(x, direction).unwrap_or(f64::NAN);
    -v_in * (1.0 + pool.fee_rate()) * x + v_out * received
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchedArbitrage {
    pub direction: Direction,
    pub amount_in: f64,
    pub profit: f64,
}

/// Best trade in one direction, searched over `[0, 2 r_in]` and widened while
/// the maximum sits on the upper edge.
pub fn brute_force_arbitrage_in(
    pool: &PoolState,
    direction: Direction,
    values: (f64, f64),
    config: &OracleConfig,
) -> SearchedArbitrage {
    let mut hi = 2.0 * pool.reserve(direction.input());
    let mut best = maximize(|x| arbitrage_objective(pool, direction, values, x), 0.0, hi, config);
    for _ in 0..40 {
        if best.argmax < 0.99 * hi {
            break;
        }
        hi *= 4.0;
        best = maximize(|x| arbitrage_objective(pool, direction, values, x), 0.0, hi, config);
    }
    if best.value <= 0.0 {
        return SearchedArbitrage { direction, amount_in: 0.0, profit: 0.0 };
    }
    SearchedArbitrage { direction, amount_in: best.argmax, profit: best.value }
}

/// Best arbitrage over both directions; zero size and profit when neither pays.
pub fn brute_force_arbitrage(pool: &PoolState, values: (f64, f64), config: &OracleConfig) -> SearchedArbitrage {
    let forward = brute_force_arbitrage_in(pool, Direction::AForB, values, config);
    let backward = brute_force_arbitrage_in(pool, Direction::BForA, values, config);
    if backward.profit > forward.profit {
        backward
    } else {
        forward
    }
}

/// An investor who derives `(1 + alpha)` times the market value from
/// `desired` buys `q` of it from the pool, paying the other token plus fee.
pub fn investor_objective(pool: &PoolState, prices: (f64, f64), alpha: f64, desired: Token, q: f64) -> f64 {
    let r_out = pool.reserve(desired);
    let r_in = pool.reserve(desired.other());
    let (p_out, p_in) = match desired {
        Token::A => (prices.0, prices.1),
        Token::B => (prices.1, prices.0),
    };
    let paid = r_in * q / (r_out - q);
    p_out * (1.0 + alpha) * q - p_in * (1.0 + pool.fee_rate()) * paid
}

pub fn brute_force_investor(
    pool: &PoolState,
    prices: (f64, f64),
    alpha: f64,
    desired: Token,
    config: &OracleConfig,
) -> Maximum {
    let hi = 0.999 * pool.reserve(desired);
    let best = maximize(|q| investor_objective(pool, prices, alpha, desired, q), 0.0, hi, config);
    if best.value <= 0.0 {
        Maximum { argmax: 0.0, value: 0.0 }
    } else {
        best
    }
}

/// Smallest jump in the value of `shocked` for which the searched arbitrage
/// buying it earns a positive profit, by bisection to `resolution`.
pub fn smallest_profitable_beta(
    pool: &PoolState,
    prices: (f64, f64),
    shocked: Token,
    resolution: f64,
    config: &OracleConfig,
) -> f64 {
    let direction = Direction::paying(shocked.other());
    let profitable = |beta: f64| {
        let values = match shocked {
            Token::A => ((1.0 + beta) * prices.0, prices.1),
            Token::B => (prices.0, (1.0 + beta) * prices.1),
        };
        brute_force_arbitrage_in(pool, direction, values, config).profit > 0.0
    };
    let mut lo = -1.0 + 1e-12;
    if profitable(lo) {
        return lo;
    }
    let mut hi = 1.0;
    while !profitable(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if profitable(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Payoffs above `-ROUNDOFF_FLOOR * p_a * y_a0` count as nonnegative in the
/// sign scan; exact zeros come out of the engine as `-1e-16`-sized noise.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// First bracket `[b, b + resolution]` over which the enumerated expected LP
/// payoff goes from nonnegative to negative, scanning up from zero shock.
pub fn scan_beta2(game: &Game, resolution: f64, config: &OracleConfig) -> Result<(f64, f64)> {
    if resolution.is_nan() || resolution <= 0.0 {
        return Err(Error::InvalidParams("scan resolution must be positive".into()));
    }
    let floor = -ROUNDOFF_FLOOR * game.scale();
    let nonnegative = |beta: f64| -> Result<bool> { Ok(game.with_beta(beta).expected_lp_payoff()? >= floor) };
    if !nonnegative(0.0)? {
        return Err(Error::InvalidParams("payoff is negative already without a shock".into()));
    }
    let mut k = 0u64;
    loop {
        let lo = k as f64 * resolution;
        let hi = (k + 1) as f64 * resolution;
        if hi > config.scan_cap {
            return Err(Error::ScanCapExhausted { lo, hi });
        }
        if !nonnegative(hi)? {
            return Ok((lo, hi));
        }
        k += 1;
    }
}

/// Symmetric difference quotient.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
