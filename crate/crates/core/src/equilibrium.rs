//! Deposit thresholds, liquidity-freeze verdicts and comparative statics.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::agents::beta_one;
use crate::error::{Error, Result};
use crate::game::{closed_form_u, EventTag, Game};
use crate::pool::{PoolState, Token};

/// Threshold of the value-balanced t=0 pool for a shock on either token.
/// Equals the fee rate.
pub fn initial_beta_one(game: &Game) -> Result<f64> {
    let (y_a0, y_b0) = game.deposit;
    let pool = PoolState::with_reserves(y_a0, y_b0, game.params.fee)?;
    beta_one(&pool, (game.params.p_a, game.params.p_b), Token::B)
}

/// Shock size above which every event has a profitable t=2 arbitrage: the
/// largest start-of-t=2 threshold across the four events.
pub fn post_trade_beta_one(game: &Game) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for event in EventTag::ALL {
        worst = worst.max(game.playout(event)?.beta1_t2);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta2Options {
    /// First geometric step of the bracket scan above the threshold.
    pub initial_step: f64,
    pub scan_cap: f64,
}

impl Default for Beta2Options {
    fn default() -> Self {
        Beta2Options { initial_step: 1e-3, scan_cap: 1e6 }
    }
}

/// Root tolerance on the payoff, relative to the deposit value `p_a * y_a0`.
pub const BETA2_PAYOFF_TOLERANCE: f64 = 1e-10;

pub fn beta2_solve(game: &Game) -> Result<Option<f64>> {
    beta2_solve_with(game, Beta2Options::default())
}

/// Shock size at which the closed-form payoff crosses zero.
///
/// Scans upward from [`post_trade_beta_one`] in doubling steps until the
/// payoff turns negative, then bisects the bracket to full precision. The
/// returned point is on the nonnegative side. `Ok(None)` means the payoff is
/// already negative at the threshold, so there is no deposit region to bound.
pub fn beta2_solve_with(game: &Game, options: Beta2Options) -> Result<Option<f64>> {
    let params = game.params;
    let y_a0 = game.y_a0();
    let payoff = |beta: f64| closed_form_u(&params.with_beta(beta), y_a0);
    let tolerance = BETA2_PAYOFF_TOLERANCE * game.scale();

    let start = post_trade_beta_one(game)?.max(0.0);
    let at_start = payoff(start)?;
    if at_start.abs() <= tolerance && at_start <= 0.0 {
        return Ok(Some(start));
    }
    if at_start < 0.0 {
        return Ok(None);
    }

    let mut lo = start;
    let mut step = options.initial_step;
    let mut hi = start + step;
    while payoff(hi)? >= 0.0 {
        lo = hi;
        step *= 2.0;
        hi = start + step;
        if hi > options.scan_cap {
            return Err(Error::ScanCapExhausted { lo, hi });
        }
    }
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if payoff(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    debug_assert!(payoff(lo)?.abs() < tolerance);
    Ok(Some(lo))
}

/// LPs stay out exactly when the payoff is strictly negative; at
/// indifference they deposit.
pub fn freeze_verdict(game: &Game) -> Result<bool> {
    Ok(closed_form_u(&game.params, game.y_a0())? < 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub fee: f64,
    pub y_a0: f64,
    pub u: f64,
    pub g1: f64,
    pub g2: f64,
    pub beta2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub beta1: f64,
    pub beta1_post_trade: f64,
    pub beta2: Option<f64>,
    pub u_at_beta: f64,
    pub freeze: bool,
    pub sweep_rows: Vec<SweepRow>,
}

fn mean_gas(game: &Game) -> Result<(f64, f64)> {
    let trajectories = game.playouts()?;
    let g1 = trajectories.iter().map(|t| EventTag::PROBABILITY * t.g1).sum();
    let g2 = trajectories.iter().map(|t| EventTag::PROBABILITY * t.g2).sum();
    Ok((g1, g2))
}

/// Summary for `game` plus one sweep row per entry of `sweep`.
pub fn equilibrium_report(game: &Game, sweep: &[Game]) -> Result<EquilibriumReport> {
    let u_at_beta = closed_form_u(&game.params, game.y_a0())?;
    let sweep_rows = sweep
        .par_iter()
        .map(|g| {
            let (g1, g2) = mean_gas(g)?;
            Ok(SweepRow {
                alpha: g.params.alpha,
                beta: g.params.beta,
                fee: g.params.fee,
                y_a0: g.y_a0(),
                u: closed_form_u(&g.params, g.y_a0())?,
                g1,
                g2,
                beta2: beta2_solve(g)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquilibriumReport {
        beta1: initial_beta_one(game)?,
        beta1_post_trade: post_trade_beta_one(game)?,
        beta2: beta2_solve(game)?,
        u_at_beta,
        freeze: u_at_beta < 0.0,
        sweep_rows,
    })
}

/// One point of the gas-fee sweep. Gas values are event averages; the
/// per-event t=2 values are kept for the threshold check.
#[derive(Debug, Clone, PartialEq)]
pub struct GasRow {
    pub alpha: f64,
    pub beta: f64,
    pub fee: f64,
    pub y_a0: f64,
    pub g1: f64,
    pub g2: f64,
    pub g2_by_event: [f64; 4],
    pub beta1_by_event: [f64; 4],
    pub beta2: Option<f64>,
    /// The point lies in the freeze region and is left out of the checks.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasSweep {
    pub rows: Vec<GasRow>,
    /// Human-readable descriptions of every failed monotonicity,
    /// proportionality or threshold check.
    pub violations: Vec<String>,
}

/// Relative tolerance of the deposit-proportionality check.
pub const GAS_SCALING_TOLERANCE: f64 = 1e-9;

fn gas_row(game: &Game) -> Result<GasRow> {
    let trajectories = game.playouts()?;
    let mut g2_by_event = [0.0; 4];
    let mut beta1_by_event = [0.0; 4];
    for (i, t) in trajectories.iter().enumerate() {
        g2_by_event[i] = t.g2;
        beta1_by_event[i] = t.beta1_t2;
    }
    let g1 = trajectories.iter().map(|t| EventTag::PROBABILITY * t.g1).sum();
    let g2 = g2_by_event.iter().map(|g| EventTag::PROBABILITY * g).sum();
    let beta2 = beta2_solve(game)?;
    let beta = game.params.beta;
    Ok(GasRow {
        alpha: game.params.alpha,
        beta,
        fee: game.params.fee,
        y_a0: game.y_a0(),
        g1,
        g2,
        g2_by_event,
        beta1_by_event,
        beta2,
        excluded: beta2.is_none_or(|b2| beta >= b2),
    })
}

/// Gas fees over the product of `games` (each supplying alpha, beta, fee and
/// the LP setup) and deposit sizes `y_a0s`, with the comparative-statics
/// checks applied to every beta-slice and deposit-slice.
pub fn gas_fee_statics(games: &[Game], y_a0s: &[f64]) -> Result<GasSweep> {
    let points: Vec<Game> = games
        .iter()
        .flat_map(|g| y_a0s.iter().map(move |y| g.with_deposit_scaled(y / g.y_a0())))
        .collect();
    let rows = points.par_iter().map(gas_row).collect::<Result<Vec<_>>>()?;
    let violations = check_gas_rows(&rows);
    Ok(GasSweep { rows, violations })
}

fn key(x: f64) -> u64 {
    x.to_bits()
}

pub fn check_gas_rows(rows: &[GasRow]) -> Vec<String> {
    let mut violations = Vec::new();

    for row in rows.iter().filter(|r| !r.excluded) {
        for (i, event) in EventTag::ALL.iter().enumerate() {
            if row.beta <= row.beta1_by_event[i] && row.g2_by_event[i] != 0.0 {
                violations.push(format!(
                    "g2 = {} for event {} at beta {} <= threshold {}",
                    row.g2_by_event[i],
                    event.label(),
                    row.beta,
                    row.beta1_by_event[i]
                ));
            }
        }
    }

    let mut beta_slices: BTreeMap<(u64, u64, u64), Vec<&GasRow>> = BTreeMap::new();
    let mut deposit_slices: BTreeMap<(u64, u64, u64), Vec<&GasRow>> = BTreeMap::new();
    for row in rows.iter().filter(|r| !r.excluded) {
        beta_slices
            .entry((key(row.alpha), key(row.fee), key(row.y_a0)))
            .or_default()
            .push(row);
        deposit_slices
            .entry((key(row.alpha), key(row.beta), key(row.fee)))
            .or_default()
            .push(row);
    }

    for slice in beta_slices.values_mut() {
        slice.sort_by(|a, b| a.beta.total_cmp(&b.beta));
        for pair in slice.windows(2) {
            if pair[1].g2 < pair[0].g2 {
                violations.push(format!(
                    "g2 decreases from {} to {} between beta {} and {} (alpha {}, f {})",
                    pair[0].g2, pair[1].g2, pair[0].beta, pair[1].beta, pair[0].alpha, pair[0].fee
                ));
            }
        }
    }

    for slice in deposit_slices.values() {
        let base = slice[0];
        for row in &slice[1..] {
            let factor = row.y_a0 / base.y_a0;
            for (name, got, want) in [("g1", row.g1, base.g1 * factor), ("g2", row.g2, base.g2 * factor)] {
                if (got - want).abs() > GAS_SCALING_TOLERANCE * want.abs() {
                    violations.push(format!(
                        "{name} = {got} at y_a0 {} but {want} expected from y_a0 {}",
                        row.y_a0, base.y_a0
                    ));
                }
            }
        }
    }
    violations
}
