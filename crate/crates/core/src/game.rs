//! The three-period game and its ex-ante LP payoff.
//!
//! t=0: LPs deposit value-balanced reserves.
//! t=1: an investor of random type buys its preferred token, then
//!      arbitrageurs race to rebalance the pool at the unchanged prices.
//! t=2: one token's value jumps by `(1 + beta)`; arbitrageurs and exiting
//!      LPs race in a single gas auction, then every LP withdraws.
//!
//! Investor type and shock target are independent fair coins, so the four
//! events are equiprobable and the expected payoff is an exact average.

use crate::agents::{
    beta_one, investor_optimal_trade, optimal_arbitrage, ArbOrder, InvestorType, MarketParams,
    TradeOrder,
};
use crate::auction::{equilibrium_bids, settle_round, Execution, ExitOrder, PendingOrder};
use crate::cli::format_number;
use crate::error::{Error, Result};
use crate::pool::{FeeRouting, LpAccount, PoolState, Token, CALIBRATED_FEE_ROUTING, DEPOSIT_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventTag {
    pub investor: InvestorType,
    pub shock: Token,
}

impl EventTag {
    pub const ALL: [EventTag; 4] = [
        EventTag { investor: InvestorType::TypeA, shock: Token::A },
        EventTag { investor: InvestorType::TypeA, shock: Token::B },
        EventTag { investor: InvestorType::TypeB, shock: Token::A },
        EventTag { investor: InvestorType::TypeB, shock: Token::B },
    ];

    pub const PROBABILITY: f64 = 0.25;

    /// `"AB"` for a type-A investor followed by a shock on B.
    pub fn label(&self) -> String {
        format!("{}{}", self.investor.label(), self.shock.label())
    }

    /// The same event with token labels swapped.
    pub fn mirrored(&self) -> EventTag {
        let investor = match self.investor {
            InvestorType::TypeA => InvestorType::TypeB,
            InvestorType::TypeB => InvestorType::TypeA,
        };
        EventTag { investor, shock: self.shock.other() }
    }
}

/// Full state path of one playout.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub event: EventTag,
    pub reserves_t0: (f64, f64),
    /// After the investor's trade.
    pub reserves_t1: (f64, f64),
    /// Start of t=2, after the t=1 arbitrage.
    pub reserves_t2: (f64, f64),
    /// After the t=2 arbitrage, before the LPs withdraw.
    pub reserves_final: (f64, f64),
    pub investor_order: Option<TradeOrder>,
    pub arb_t1: Option<ArbOrder>,
    pub g1: f64,
    pub arb_t2: Option<ArbOrder>,
    pub g2: f64,
    /// Arbitrage threshold for the shocked token at the start of t=2.
    pub beta1_t2: f64,
    pub post_shock_prices: (f64, f64),
    /// Value of the t=2 LP claim minus the held endowment, less the t=2
    /// arbitrage surplus.
    pub lp_payoff_total: f64,
    /// The same quantity measured from what the LPs actually withdrew.
    pub realized_lp_payoff: f64,
    /// Realized payoff of each LP, in deposit order.
    pub lp_payoffs: Vec<f64>,
    pub t1_executions: Vec<Execution>,
    pub t2_executions: Vec<Execution>,
}

impl Trajectory {
    pub const COLUMNS: [&'static str; 17] = [
        "event",
        "y_a_t0",
        "y_b_t0",
        "y_a_t1",
        "y_b_t1",
        "y_a_t2",
        "y_b_t2",
        "investor_q",
        "arb_t1_in",
        "g1",
        "arb_t2_in",
        "g2",
        "beta1_t2",
        "p_a_t2",
        "p_b_t2",
        "lp_payoff_total",
        "realized_lp_payoff",
    ];

    /// One flat CSV record, aligned with [`Trajectory::COLUMNS`].
    pub fn flat_record(&self) -> Vec<String> {
        let num = |x: f64| format_number(x);
        vec![
            self.event.label(),
            num(self.reserves_t0.0),
            num(self.reserves_t0.1),
            num(self.reserves_t1.0),
            num(self.reserves_t1.1),
            num(self.reserves_t2.0),
            num(self.reserves_t2.1),
            num(self.investor_order.map_or(0.0, |o| o.amount_out_requested)),
            num(self.arb_t1.map_or(0.0, |o| o.amount_in)),
            num(self.g1),
            num(self.arb_t2.map_or(0.0, |o| o.amount_in)),
            num(self.g2),
            num(self.beta1_t2),
            num(self.post_shock_prices.0),
            num(self.post_shock_prices.1),
            num(self.lp_payoff_total),
            num(self.realized_lp_payoff),
        ]
    }
}

/// A fully specified game: market parameters, the t=0 deposit, how it is
/// split among LPs, and the fee routing of the pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    pub params: MarketParams,
    pub deposit: (f64, f64),
    pub lp_fractions: Vec<f64>,
    pub fee_routing: FeeRouting,
}

impl Game {
    /// Equal LP split, value-balanced deposit of `y_a0` token A.
    pub fn new(params: MarketParams, y_a0: f64) -> Result<Self> {
        params.validate()?;
        if !(y_a0.is_finite() && y_a0 > 0.0) {
            return Err(Error::InvalidParams(format!("deposit must be positive, got {y_a0}")));
        }
        let n = params.n_lps;
        Ok(Game {
            params,
            deposit: (y_a0, y_a0 * params.p_a / params.p_b),
            lp_fractions: vec![1.0 / n as f64; n],
            fee_routing: CALIBRATED_FEE_ROUTING,
        })
    }

    pub fn with_lp_fractions(mut self, fractions: Vec<f64>) -> Result<Self> {
        if fractions.len() < 2 || fractions.iter().any(|w| !(*w > 0.0 && *w < 1.0)) {
            return Err(Error::InvalidParams(
                "need at least two LP fractions, each in (0, 1)".into(),
            ));
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!("LP fractions sum to {total}, not 1")));
        }
        self.params.n_lps = fractions.len();
        self.lp_fractions = fractions;
        Ok(self)
    }

    pub fn with_fee_routing(mut self, routing: FeeRouting) -> Self {
        self.fee_routing = routing;
        self
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Game { params: self.params.with_beta(beta), ..self.clone() }
    }

    pub fn with_deposit_scaled(&self, factor: f64) -> Self {
        Game {
            deposit: (self.deposit.0 * factor, self.deposit.1 * factor),
            ..self.clone()
        }
    }

    pub fn y_a0(&self) -> f64 {
        self.deposit.0
    }

    /// Value of the t=0 deposit in token A, `p_a * y_a0`; the payoff scale.
    pub fn scale(&self) -> f64 {
        self.params.p_a * self.deposit.0
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let (y_a, y_b) = self.deposit;
        let (v_a, v_b) = (y_a * self.params.p_a, y_b * self.params.p_b);
        if !(y_a > 0.0 && y_b > 0.0) || (v_a - v_b).abs() > DEPOSIT_TOLERANCE * v_a.max(v_b) {
            return Err(Error::UnbalancedPool { value_a: v_a, value_b: v_b });
        }
        if self.lp_fractions.len() != self.params.n_lps {
            return Err(Error::InvalidParams("one LP fraction per LP is required".into()));
        }
        Ok(())
    }

    pub fn playout(&self, event: EventTag) -> Result<Trajectory> {
        self.validate()?;
        let params = &self.params;
        let prices = (params.p_a, params.p_b);
        let m = params.n_arbitrageurs;
        let (y_a0, y_b0) = self.deposit;

        // t = 0
        let mut pool = PoolState::empty(params.fee)?.with_fee_routing(self.fee_routing);
        let mut accounts = Vec::with_capacity(self.lp_fractions.len());
        for &w in &self.lp_fractions {
            let (next, shares) = pool.deposit(w * y_a0, w * y_b0, params.p_a, params.p_b)?;
            pool = next;
            accounts.push(LpAccount { shares, deposit_fraction: w });
        }
        let reserves_t0 = pool.reserves();

        // t = 1
        let investor_id = m + accounts.len();
        let investor_order = investor_optimal_trade(&pool, params, event.investor)?;
        if let Some(order) = investor_order {
            pool = settle_round(&pool, vec![PendingOrder::trade(investor_id, order)])?.pool;
        }
        let reserves_t1 = pool.reserves();

        let arb_t1 = optimal_arbitrage(&pool, prices)?;
        let mut t1_executions = Vec::new();
        let mut g1 = 0.0;
        if let Some(order) = arb_t1 {
            let bids = equilibrium_bids(order.expected_profit, m, &self.lp_fractions)?;
            let orders = (0..m)
                .map(|id| PendingOrder::arb(id, order.with_gas_bid(bids.arb_gas)))
                .collect();
            let round = settle_round(&pool, orders)?;
            g1 = round.total_gas();
            pool = round.pool;
            t1_executions = round.executed;
        }
        let reserves_t2 = pool.reserves();

        // t = 2
        let claim_a = pool.claimable(Token::A);
        let claim_b = pool.claimable(Token::B);
        let post_shock_prices = params.shocked_prices(event.shock);
        let (p_a2, p_b2) = post_shock_prices;
        let beta1_t2 = beta_one(&pool, prices, event.shock)?;
        let arb_t2 = optimal_arbitrage(&pool, post_shock_prices)?;
        let pi = arb_t2.map_or(0.0, |o| o.expected_profit);
        let bids = equilibrium_bids(pi, m, &self.lp_fractions)?;
        let mut orders: Vec<PendingOrder> = Vec::with_capacity(m + accounts.len());
        if let Some(order) = arb_t2 {
            orders.extend((0..m).map(|id| PendingOrder::arb(id, order.with_gas_bid(bids.arb_gas))));
        }
        for (i, (account, cap)) in accounts.iter().zip(&bids.lp_bid_caps).enumerate() {
            orders.push(PendingOrder::exit(
                m + i,
                ExitOrder {
                    lp_shares: account.shares,
                    deposit_fraction: account.deposit_fraction,
                    gas_bid: *cap,
                },
            ));
        }
        let round = settle_round(&pool, orders)?;
        let g2 = round.total_gas();

        let mut reserves_final = pool.reserves();
        let mut lp_payoffs = vec![0.0; accounts.len()];
        for execution in &round.executed {
            match execution {
                Execution::Arb { order, amount_out, .. } => {
                    let after = pool.execute_swap(order.amount_in, order.direction)?;
                    debug_assert_eq!(after.amount_out, *amount_out);
                    reserves_final = after.pool.reserves();
                }
                Execution::Exit { agent_id, order, amount_a, amount_b } => {
                    let held = order.deposit_fraction * (p_a2 * y_a0 + p_b2 * y_b0);
                    lp_payoffs[agent_id - m] = p_a2 * amount_a + p_b2 * amount_b - held;
                }
                _ => {}
            }
        }
        let realized_lp_payoff = lp_payoffs.iter().sum();
        let lp_payoff_total = p_a2 * (claim_a - y_a0) + p_b2 * (claim_b - y_b0) - pi;

        Ok(Trajectory {
            event,
            reserves_t0,
            reserves_t1,
            reserves_t2,
            reserves_final,
            investor_order,
            arb_t1,
            g1,
            arb_t2,
            g2,
            beta1_t2,
            post_shock_prices,
            lp_payoff_total,
            realized_lp_payoff,
            lp_payoffs,
            t1_executions,
            t2_executions: round.executed,
        })
    }

    pub fn playouts(&self) -> Result<Vec<Trajectory>> {
        EventTag::ALL.iter().map(|e| self.playout(*e)).collect()
    }

    /// Exact expectation of the LP payoff over the four events.
    pub fn expected_lp_payoff(&self) -> Result<f64> {
        Ok(self
            .playouts()?
            .iter()
            .map(|t| EventTag::PROBABILITY * t.lp_payoff_total)
            .sum())
    }

    /// True when every event has an investor trade and a profitable
    /// arbitrage at both t=1 and t=2. The closed-form payoff describes
    /// exactly this regime.
    pub fn closed_form_applies(&self) -> Result<bool> {
        Ok(self
            .playouts()?
            .iter()
            .all(|t| t.investor_order.is_some() && t.arb_t1.is_some() && t.arb_t2.is_some()))
    }
}

pub fn playout(params: &MarketParams, initial_deposit: (f64, f64), event: EventTag) -> Result<Trajectory> {
    let mut game = Game::new(*params, initial_deposit.0)?;
    game.deposit = initial_deposit;
    game.playout(event)
}

pub fn expected_lp_payoff(params: &MarketParams, initial_deposit: (f64, f64)) -> Result<f64> {
    let mut game = Game::new(*params, initial_deposit.0)?;
    game.deposit = initial_deposit;
    game.expected_lp_payoff()
}

struct ClosedFormTerms {
    /// `sqrt(1 - f / (sqrt(1 + alpha) sqrt(1 + f)))`
    root: f64,
    /// `(1 + f) root - f sqrt(1 + f) / sqrt(1 + alpha)`
    tail: f64,
}

fn closed_form_terms(alpha: f64, fee: f64) -> Result<ClosedFormTerms> {
    let sa = (alpha + 1.0).sqrt();
    let sf = (fee + 1.0).sqrt();
    let inner = 1.0 - fee / (sa * sf);
    if inner < 0.0 {
        return Err(Error::OutsideModelDomain("negative radicand in the post-trade reserve term"));
    }
    let root = inner.sqrt();
    Ok(ClosedFormTerms { root, tail: (fee + 1.0) * root - fee * sf / sa })
}

/// Closed-form ex-ante LP payoff. It agrees with
/// [`Game::expected_lp_payoff`] whenever [`Game::closed_form_applies`].
pub fn closed_form_u(params: &MarketParams, y_a0: f64) -> Result<f64> {
    let (alpha, beta, f) = (params.alpha, params.beta, params.fee);
    let ClosedFormTerms { root, tail } = closed_form_terms(alpha, f)?;
    let radicand = (beta + 1.0) * root * tail;
    if radicand < 0.0 {
        return Err(Error::OutsideModelDomain("negative radicand in the t=2 arbitrage term"));
    }
    let sa = (alpha + 1.0).sqrt();
    let sf = (f + 1.0).sqrt();
    let bracket = sf * f * f / sa - 2.0 * (f + 1.0) * f * root - 2.0 * beta - 4.0
        + 4.0 * (f + 1.0) * radicand.sqrt();
    Ok(0.5 * params.p_a * y_a0 * bracket)
}

/// Partial derivative of [`closed_form_u`] with respect to `beta`:
/// `(-1 + (1 + f) sqrt(root * tail / (1 + beta))) * p_a * y_a0`.
///
/// With `f = 0` the product `root * tail` is one and this is
/// `(-1 + 1 / sqrt(1 + beta)) * p_a * y_a0`.
pub fn du_dbeta_closed_form(params: &MarketParams, y_a0: f64) -> Result<f64> {
    let ClosedFormTerms { root, tail } = closed_form_terms(params.alpha, params.fee)?;
    let product = root * tail;
    if product < 0.0 {
        return Err(Error::OutsideModelDomain("negative radicand in the t=2 arbitrage term"));
    }
    let f = params.fee;
    Ok((-1.0 + (1.0 + f) * (product / (1.0 + params.beta)).sqrt()) * params.p_a * y_a0)
}

/// Relative agreement required between engine and closed form per cell.
pub const CALIBRATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationCell {
    pub routing: FeeRouting,
    pub alpha: f64,
    pub beta: f64,
    pub fee: f64,
    pub y_a0: f64,
    pub u_enumerated: f64,
    pub u_closed_form: f64,
    pub rel_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    /// Cells for every routing in [`FeeRouting::ALL`] order, grid order within.
    pub cells: Vec<CalibrationCell>,
}

impl CalibrationReport {
    /// `(routing, cells within tolerance, total cells)` per routing.
    pub fn summary(&self) -> Vec<(FeeRouting, usize, usize)> {
        FeeRouting::ALL
            .iter()
            .map(|r| {
                let cells = self.cells.iter().filter(|c| c.routing == *r);
                let total = cells.clone().count();
                let passed = cells.filter(|c| c.rel_gap <= CALIBRATION_TOLERANCE).count();
                (*r, passed, total)
            })
            .collect()
    }

    /// The routing that passes every cell, if exactly one does.
    pub fn selected(&self) -> Option<FeeRouting> {
        let passing: Vec<FeeRouting> = self
            .summary()
            .into_iter()
            .filter(|(_, passed, total)| *total > 0 && passed == total)
            .map(|(r, _, _)| r)
            .collect();
        match passing.as_slice() {
            [only] => Some(*only),
            _ => None,
        }
    }
}

/// Runs every grid point under each fee routing and compares the
/// enumerated payoff with [`closed_form_u`]. Points outside the
/// closed-form regime are rejected.
pub fn calibrate(grid: &[Game]) -> Result<CalibrationReport> {
    use rayon::prelude::*;
    for game in grid {
        if !game.closed_form_applies()? {
            return Err(Error::OutsideModelDomain("calibration point outside the closed-form regime"));
        }
    }
    let jobs: Vec<(FeeRouting, &Game)> = FeeRouting::ALL
        .iter()
        .flat_map(|r| grid.iter().map(move |g| (*r, g)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|(routing, game)| {
            let u_enumerated = (*game).clone().with_fee_routing(*routing).expected_lp_payoff()?;
            let u_closed_form = closed_form_u(&game.params, game.y_a0())?;
            Ok(CalibrationCell {
                routing: *routing,
                alpha: game.params.alpha,
                beta: game.params.beta,
                fee: game.params.fee,
                y_a0: game.y_a0(),
                u_enumerated,
                u_closed_form,
                rel_gap: (u_enumerated - u_closed_form).abs() / u_closed_form.abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CalibrationReport { cells })
}
