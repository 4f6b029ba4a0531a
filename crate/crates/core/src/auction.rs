//! Priority gas auction for simultaneously submitted orders.
//!
//! Orders in one round execute from the highest gas bid to the lowest. Only
//! the first order that actually executes pays its bid; the round is a race
//! for first execution and later or failed orders pay nothing. Gas leaves the
//! game entirely, it is never credited to the pool or to any LP.

use std::cmp::Ordering;

use crate::agents::{ArbOrder, TradeOrder};
use crate::error::{Error, Result};
use crate::pool::PoolState;

/// A liquidity provider's request to redeem all of its shares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitOrder {
    pub lp_shares: f64,
    pub deposit_fraction: f64,
    pub gas_bid: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderKind {
    Arb(ArbOrder),
    Trade(TradeOrder),
    Exit(ExitOrder),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingOrder {
    pub agent_id: usize,
    pub order: OrderKind,
}

impl PendingOrder {
    pub fn arb(agent_id: usize, order: ArbOrder) -> Self {
        PendingOrder { agent_id, order: OrderKind::Arb(order) }
    }

    pub fn trade(agent_id: usize, order: TradeOrder) -> Self {
        PendingOrder { agent_id, order: OrderKind::Trade(order) }
    }

    pub fn exit(agent_id: usize, order: ExitOrder) -> Self {
        PendingOrder { agent_id, order: OrderKind::Exit(order) }
    }

    pub fn gas_bid(&self) -> f64 {
        match &self.order {
            OrderKind::Arb(o) => o.gas_bid,
            OrderKind::Trade(o) => o.gas_bid,
            OrderKind::Exit(o) => o.gas_bid,
        }
    }
}

/// Equilibrium bids of the complete-information race for first execution.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumBids {
    pub arb_gas: f64,
    pub lp_bid_caps: Vec<f64>,
}

/// With `m >= 2` arbitrageurs each valuing first execution at `pi`, the
/// winning bid is bid up to `pi`. LP `i` values first execution at its
/// exposure `w_i * pi` and never bids above that.
pub fn equilibrium_bids(pi: f64, m: usize, lp_fractions: &[f64]) -> Result<EquilibriumBids> {
    if m < 2 {
        return Err(Error::TooFewArbitrageurs(m));
    }
    if !(pi.is_finite() && pi >= 0.0) {
        return Err(Error::InvalidParams(format!("arbitrage surplus must be nonnegative, got {pi}")));
    }
    if lp_fractions.iter().any(|w| !(*w > 0.0 && *w < 1.0)) {
        return Err(Error::InvalidParams("LP fractions must lie in (0, 1)".into()));
    }
    let total: f64 = lp_fractions.iter().sum();
    if total > 1.0 + 1e-9 {
        return Err(Error::InvalidParams(format!("LP fractions sum to {total} > 1")));
    }
    Ok(EquilibriumBids {
        arb_gas: pi,
        lp_bid_caps: lp_fractions.iter().map(|w| w * pi).collect(),
    })
}

/// Execution order: descending gas bid, ties by ascending agent id.
pub fn resolve_priority(mut orders: Vec<PendingOrder>) -> Vec<PendingOrder> {
    orders.sort_by(|a, b| {
        b.gas_bid()
            .partial_cmp(&a.gas_bid())
            .unwrap_or(Ordering::Equal)
            .then(a.agent_id.cmp(&b.agent_id))
    });
    orders
}

#[derive(Debug, Clone, PartialEq)]
pub enum Execution {
    Arb {
        agent_id: usize,
        order: ArbOrder,
        amount_out: f64,
        realized_profit: f64,
    },
    Trade {
        agent_id: usize,
        order: TradeOrder,
        amount_out: f64,
    },
    Exit {
        agent_id: usize,
        order: ExitOrder,
        amount_a: f64,
        amount_b: f64,
    },
    /// An arbitrage order that was no longer profitable when its turn came.
    Dropped { agent_id: usize, order: ArbOrder },
}

impl Execution {
    pub fn agent_id(&self) -> usize {
        match self {
            Execution::Arb { agent_id, .. }
            | Execution::Trade { agent_id, .. }
            | Execution::Exit { agent_id, .. }
            | Execution::Dropped { agent_id, .. } => *agent_id,
        }
    }

    pub fn is_dropped(&self) -> bool {
        matches!(self, Execution::Dropped { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub pool: PoolState,
    /// One entry per submitted order, in execution order.
    pub executed: Vec<Execution>,
    /// `(agent_id, gas)` for every submitted order, in execution order.
    pub gas_paid: Vec<(usize, f64)>,
}

impl RoundOutcome {
    pub fn total_gas(&self) -> f64 {
        self.gas_paid.iter().map(|(_, g)| g).sum()
    }

    /// The first order that actually executed, if any.
    pub fn winner(&self) -> Option<&Execution> {
        self.executed.iter().find(|e| !e.is_dropped())
    }
}

/// Executes one simultaneous round against `pool`.
pub fn settle_round(pool: &PoolState, orders: Vec<PendingOrder>) -> Result<RoundOutcome> {
    let mut pool = pool.clone();
    let mut executed = Vec::with_capacity(orders.len());
    let mut gas_paid = Vec::with_capacity(orders.len());
    let mut charged = false;
    for pending in resolve_priority(orders) {
        let agent_id = pending.agent_id;
        let execution = match pending.order {
            OrderKind::Arb(order) => {
                let profit = order.profit_against(&pool)?;
                if profit > 0.0 {
                    let swap = pool.execute_swap(order.amount_in, order.direction)?;
                    pool = swap.pool;
                    Execution::Arb {
                        agent_id,
                        order,
                        amount_out: swap.amount_out,
                        realized_profit: profit,
                    }
                } else {
                    Execution::Dropped { agent_id, order }
                }
            }
            OrderKind::Trade(order) => {
                let swap = pool.execute_swap(order.amount_in, order.direction())?;
                pool = swap.pool;
                Execution::Trade {
                    agent_id,
                    order,
                    amount_out: swap.amount_out,
                }
            }
            OrderKind::Exit(order) => {
                let out = pool.withdraw(order.lp_shares)?;
                pool = out.pool;
                Execution::Exit {
                    agent_id,
                    order,
                    amount_a: out.amount_a,
                    amount_b: out.amount_b,
                }
            }
        };
        let gas = if !charged && !execution.is_dropped() {
            charged = true;
            pending.gas_bid()
        } else {
            0.0
        };
        gas_paid.push((agent_id, gas));
        executed.push(execution);
    }
    Ok(RoundOutcome { pool, executed, gas_paid })
}
