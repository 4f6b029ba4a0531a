//! A three-period constant-product AMM game.
//!
//! Liquidity providers deposit at t=0, an investor of uncertain type
//! trades at t=1 and arbitrageurs realign the pool, then a price shock hits
//! at t=2 and arbitrageurs race LP exits through a gas-priority auction.
//! The crate computes every trajectory exactly, prices the ex-ante LP
//! payoff and finds the shock size past which liquidity freezes.

pub mod agents;
pub mod auction;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod oracle;
pub mod pool;

pub use agents::{
    arb_profit_closed_form, arbitrage_profit, beta_one, investor_optimal_trade, optimal_arbitrage,
    ArbOrder, InvestorType, MarketParams, TradeOrder,
};
pub use auction::{
    equilibrium_bids, resolve_priority, settle_round, EquilibriumBids, Execution, ExitOrder,
    OrderKind, PendingOrder, RoundOutcome,
};
pub use equilibrium::{
    beta2_solve, beta2_solve_with, equilibrium_report, freeze_verdict, gas_fee_statics,
    initial_beta_one, post_trade_beta_one, Beta2Options, EquilibriumReport, GasRow, GasSweep,
};
pub use error::{Error, Result};
pub use game::{
    calibrate, closed_form_u, du_dbeta_closed_form, expected_lp_payoff, playout, EventTag, Game,
    Trajectory,
};
pub use pool::{Direction, FeeRouting, LpAccount, PoolState, Token};
