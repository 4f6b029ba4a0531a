//! Acceptance suite. Runs each criterion, prints one PASS/FAIL line per
//! criterion and exits nonzero if any failed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::time::{Duration, Instant};

use amm_core::agents::{arb_profit_closed_form, beta_one, investor_optimal_trade, optimal_arbitrage};
use amm_core::auction::{equilibrium_bids, settle_round, Execution, PendingOrder};
use amm_core::cli::Command;
use amm_core::equilibrium::{beta2_solve, gas_fee_statics, post_trade_beta_one};
use amm_core::game::{calibrate, closed_form_u, du_dbeta_closed_form, EventTag, Game};
use amm_core::oracle::{
    brute_force_arbitrage, brute_force_investor, central_difference, scan_beta2, smallest_profitable_beta,
    OracleConfig,
};
use amm_core::pool::{Direction, FeeRouting, PoolState, Token, CALIBRATED_FEE_ROUTING};
use amm_core::{InvestorType, MarketParams};
use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(elapsed: Duration, budget_secs: u64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < budget_secs as f64, || {
        format!("took {:.1}s, budget {budget_secs}s", elapsed.as_secs_f64())
    })
}

fn closed_form_arbitrage() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(1);
    let config = OracleConfig::default();
    let (mut worst_x, mut worst_pi) = (0.0f64, 0.0f64);
    for i in 0..200 {
        let r_a = rng.gen_range(1.0..1e3);
        let r_b = rng.gen_range(1.0..1e3);
        let prices = (rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0));
        let fee = rng.gen_range(0.0..0.05);
        let shocked = if rng.gen_bool(0.5) { Token::A } else { Token::B };
        let pool = PoolState::with_reserves(r_a, r_b, fee).map_err(|e| e.to_string())?;
        let beta1 = beta_one(&pool, prices, shocked).map_err(|e| e.to_string())?;
        let beta = beta1 + rng.gen_range(0.0..2.0);
        if beta <= beta1 {
            continue;
        }
        let values = match shocked {
            Token::A => ((1.0 + beta) * prices.0, prices.1),
            Token::B => (prices.0, (1.0 + beta) * prices.1),
        };
        let order = optimal_arbitrage(&pool, values)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("instance {i}: no order above the threshold"))?;
        ensure(order.direction == Direction::paying(shocked.other()), || {
            format!("instance {i}: order buys the wrong token")
        })?;
        let direction = order.direction;
        let reserves = (pool.reserve(direction.input()), pool.reserve(direction.output()));
        let pre = match direction.input() {
            Token::A => (prices.0, prices.1),
            Token::B => (prices.1, prices.0),
        };
        let closed = arb_profit_closed_form(reserves, pre, fee, beta).map_err(|e| e.to_string())?;
        let searched = brute_force_arbitrage(&pool, values, &config);
        ensure(searched.direction == direction, || format!("instance {i}: oracle picks the other direction"))?;
        let dx = rel(order.amount_in, searched.amount_in);
        let dpi = rel(order.expected_profit, searched.profit).max(rel(closed, searched.profit));
        worst_x = worst_x.max(dx);
        worst_pi = worst_pi.max(dpi);
        ensure(dx <= 1e-6, || {
            format!("instance {i}: x* = {} vs oracle {} (rel {dx:.2e})", order.amount_in, searched.amount_in)
        })?;
        ensure(dpi <= 1e-8, || {
            format!("instance {i}: profit {} / {closed} vs oracle {} (rel {dpi:.2e})", order.expected_profit, searched.profit)
        })?;
    }
    within(start.elapsed(), 10)?;
    Ok(format!(
        "200 instances, worst rel x* {worst_x:.1e}, worst rel profit {worst_pi:.1e}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn threshold_beta_one() -> Outcome {
    let mut rng = rng(2);
    let config = OracleConfig::default();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let pool = PoolState::with_reserves(rng.gen_range(1.0..1e3), rng.gen_range(1.0..1e3), rng.gen_range(0.0..0.05))
            .map_err(|e| e.to_string())?;
        let prices = (rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0));
        let shocked = if rng.gen_bool(0.5) { Token::A } else { Token::B };
        let formula = beta_one(&pool, prices, shocked).map_err(|e| e.to_string())?;
        let searched = smallest_profitable_beta(&pool, prices, shocked, 1e-11, &config);
        let gap = (formula - searched).abs();
        worst = worst.max(gap);
        ensure(gap <= 1e-8, || format!("instance {i}: formula {formula}, bisection {searched}"))?;
    }
    Ok(format!("50 instances, worst gap {worst:.1e}"))
}

fn investor_trade() -> Outcome {
    let mut rng = rng(3);
    let config = OracleConfig::default();
    let (mut worst, mut no_trade) = (0.0f64, 0);
    for i in 0..100 {
        let p_a = rng.gen_range(0.1..10.0);
        let p_b = rng.gen_range(0.1..10.0);
        let r_a = rng.gen_range(1.0..1e3);
        let fee = rng.gen_range(0.0..0.05);
        // a third of the draws land near the fee so both sides of alpha = f appear
        let alpha = if i % 3 == 0 { rng.gen_range(0.0..0.1) } else { rng.gen_range(0.0..2.0) };
        let pool = PoolState::with_reserves(r_a, r_a * p_a / p_b, fee).map_err(|e| e.to_string())?;
        let params = MarketParams { p_a, p_b, alpha, beta: 0.0, fee, n_lps: 2, n_arbitrageurs: 2 };
        let investor = if rng.gen_bool(0.5) { InvestorType::TypeA } else { InvestorType::TypeB };
        let trade = investor_optimal_trade(&pool, &params, investor).map_err(|e| e.to_string())?;
        let searched = brute_force_investor(&pool, (p_a, p_b), alpha, investor.desired(), &config);
        match trade {
            None => {
                no_trade += 1;
                ensure(alpha <= fee, || format!("instance {i}: no trade at alpha {alpha} > f {fee}"))?;
                ensure(searched.value <= 1e-12 * p_a * r_a, || {
                    format!("instance {i}: oracle finds gain {} with alpha <= f", searched.value)
                })?;
            }
            Some(order) => {
                ensure(alpha > fee, || format!("instance {i}: trade at alpha {alpha} <= f {fee}"))?;
                ensure(order.amount_out_requested > 0.0, || format!("instance {i}: zero-size order"))?;
                let gap = rel(order.amount_out_requested, searched.argmax);
                worst = worst.max(gap);
                ensure(gap <= 1e-6, || {
                    format!("instance {i}: q* {} vs oracle {} (rel {gap:.2e})", order.amount_out_requested, searched.argmax)
                })?;
            }
        }
    }
    ensure(no_trade > 0, || "no instance with alpha <= f was drawn".into())?;
    Ok(format!("100 instances ({no_trade} without trade), worst rel q* {worst:.1e}"))
}

fn calibration_grid() -> Result<Vec<Game>, String> {
    let mut grid = Vec::new();
    for alpha in [0.2, 0.4, 0.6, 0.8, 1.0] {
        for beta in [0.05, 0.1, 0.2, 0.3, 0.5] {
            for fee in [0.001, 0.003, 0.01] {
                grid.push(Game::new(MarketParams::unit(alpha, beta, fee), 1.0).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(grid)
}

fn calibration() -> Outcome {
    let report = calibrate(&calibration_grid()?).map_err(|e| e.to_string())?;
    let summary = report
        .summary()
        .iter()
        .map(|(r, passed, total)| format!("{} {passed}/{total}", r.name()))
        .collect::<Vec<_>>()
        .join(", ");
    match report.selected() {
        Some(routing) if routing == CALIBRATED_FEE_ROUTING => {
            let suite_default = Game::new(MarketParams::unit(0.5, 0.1, 0.003), 1.0).map_err(|e| e.to_string())?;
            ensure(suite_default.fee_routing == routing, || "games do not default to the calibrated routing".into())?;
            Ok(format!("{summary}; selected {}", routing.name()))
        }
        selected => {
            let mut table = format!("{summary}; selected {selected:?}\n  convention alpha beta f rel_gap");
            for c in &report.cells {
                table.push_str(&format!("\n  {} {} {} {} {:.3e}", c.routing.name(), c.alpha, c.beta, c.fee, c.rel_gap));
            }
            Err(table)
        }
    }
}

fn random_regime_game(rng: &mut ChaCha8Rng, n: usize) -> Result<Game, String> {
    let fee = rng.gen_range(0.001..0.01);
    let alpha = rng.gen_range(0.1..1.5);
    let m = rng.gen_range(2..=5);
    let mut weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let params = MarketParams {
        p_a: rng.gen_range(0.5..2.0),
        p_b: rng.gen_range(0.5..2.0),
        alpha,
        beta: 0.0,
        fee,
        n_lps: n,
        n_arbitrageurs: m,
    };
    let game = Game::new(params, rng.gen_range(1.0..1e3))
        .and_then(|g| g.with_lp_fractions(weights))
        .map_err(|e| e.to_string())?;
    let beta1 = post_trade_beta_one(&game).map_err(|e| e.to_string())?;
    Ok(game.with_beta(beta1 + rng.gen_range(0.01..0.5)))
}

fn priority_auction() -> Outcome {
    let mut rng = rng(5);
    let mut rounds = 0;
    for i in 0..100 {
        let n = 2 + i % 9;
        let game = random_regime_game(&mut rng, n)?;
        let event = EventTag::ALL[rng.gen_range(0..4)];
        let t = game.playout(event).map_err(|e| e.to_string())?;
        let arb = t.arb_t2.ok_or_else(|| format!("config {i}: no t=2 arbitrage"))?;
        let pi = arb.expected_profit;
        let bids = equilibrium_bids(pi, game.params.n_arbitrageurs, &game.lp_fractions).map_err(|e| e.to_string())?;
        ensure(bids.lp_bid_caps.iter().all(|cap| *cap < pi), || format!("config {i}: an LP cap reaches pi"))?;

        // the engine's own round, and a fresh round with shuffled submission order
        let mut checks = vec![t.t2_executions.clone()];
        let start = PoolState::with_reserves(t.reserves_t2.0, t.reserves_t2.1, game.params.fee).map_err(|e| e.to_string())?;
        let mut orders: Vec<PendingOrder> = (0..game.params.n_arbitrageurs)
            .map(|id| PendingOrder::arb(id, arb.with_gas_bid(bids.arb_gas)))
            .collect();
        for (k, cap) in bids.lp_bid_caps.iter().enumerate() {
            let exit = amm_core::auction::ExitOrder {
                lp_shares: game.lp_fractions[k],
                deposit_fraction: game.lp_fractions[k],
                gas_bid: *cap,
            };
            orders.push(PendingOrder::exit(game.params.n_arbitrageurs + k, exit));
        }
        for j in (1..orders.len()).rev() {
            orders.swap(j, rng.gen_range(0..=j));
        }
        let round = settle_round(&start, orders).map_err(|e| e.to_string())?;
        checks.push(round.executed.clone());

        for executed in checks {
            let first = executed
                .iter()
                .find(|e| !e.is_dropped())
                .ok_or_else(|| format!("config {i}: nothing executed"))?;
            let Execution::Arb { order, realized_profit, .. } = first else {
                return Err(format!("config {i}: first execution is not the arbitrage: {first:?}"));
            };
            let net = realized_profit - order.gas_bid;
            ensure(net.abs() <= 1e-10 * pi.max(1.0), || format!("config {i}: winner nets {net}"))?;
            ensure(
                executed.iter().filter(|e| matches!(e, Execution::Arb { .. })).count() == 1,
                || format!("config {i}: more than one arbitrage executed"),
            )?;
            rounds += 1;
        }
    }
    Ok(format!("{rounds} rounds over 100 configurations, arbitrage first in all"))
}

fn freeze_threshold() -> Outcome {
    let start = Instant::now();
    let alphas: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let fees = [0.001, 0.002, 0.003, 0.005, 0.01];
    let config = OracleConfig::default();
    let mut max_beta2: f64 = 0.0;
    for fee in fees {
        let mut previous: Option<f64> = None;
        for &alpha in &alphas {
            let game = Game::new(MarketParams::unit(alpha, 0.0, fee), 1.0).map_err(|e| e.to_string())?;
            let beta2 = beta2_solve(&game)
                .map_err(|e| e.to_string())?
                .ok_or_else(|| format!("alpha {alpha}, f {fee}: no beta2"))?;
            let beta1 = post_trade_beta_one(&game).map_err(|e| e.to_string())?;
            ensure(beta2 > fee, || format!("alpha {alpha}, f {fee}: beta2 {beta2} <= f"))?;
            ensure(beta2 > beta1, || format!("alpha {alpha}, f {fee}: beta2 {beta2} at the threshold {beta1}"))?;

            // dense scan of the closed form past the threshold, geometric in beta - beta1
            let u = |beta: f64| closed_form_u(&game.params.with_beta(beta), game.y_a0()).map_err(|e| e.to_string());
            let mut signs = Vec::with_capacity(1000);
            let mut crossing = None;
            for k in 0..1000 {
                let beta = beta1 + 1e-6 * 1e8f64.powf(k as f64 / 999.0);
                let negative = u(beta)? < 0.0;
                if negative && crossing.is_none() {
                    crossing = Some(beta);
                }
                signs.push(negative);
            }
            let flips = signs.windows(2).filter(|w| w[0] != w[1]).count();
            ensure(flips == 1 && !signs[0], || format!("alpha {alpha}, f {fee}: {flips} sign changes in the scan"))?;
            let crossing = crossing.unwrap_or(f64::INFINITY);
            ensure(beta2 < crossing, || format!("alpha {alpha}, f {fee}: beta2 {beta2} beyond the scan's crossing"))?;

            // the enumeration engine puts the root in the same place
            let (lo, hi) = scan_beta2(&game, 1e-3, &config).map_err(|e| e.to_string())?;
            ensure(lo - 1e-9 <= beta2 && beta2 <= hi + 1e-9, || {
                format!("alpha {alpha}, f {fee}: beta2 {beta2} outside the engine bracket [{lo}, {hi}]")
            })?;

            if let Some(p) = previous {
                ensure(beta2 >= p, || format!("f {fee}: beta2 falls from {p} to {beta2} at alpha {alpha}"))?;
            }
            previous = Some(beta2);
            max_beta2 = max_beta2.max(beta2);
        }
    }
    within(start.elapsed(), 60)?;
    Ok(format!(
        "50 grid points, one sign change each, beta2 up to {max_beta2:.4}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn derivative() -> Outcome {
    let mut rng = rng(7);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let fee = rng.gen_range(0.0..0.05);
        let alpha = rng.gen_range(fee..2.0);
        let beta = rng.gen_range(0.0..5.0);
        let y_a0 = rng.gen_range(1.0..100.0);
        let params = MarketParams { p_a: rng.gen_range(0.5..2.0), ..MarketParams::unit(alpha, beta, fee) };
        let exact = du_dbeta_closed_form(&params, y_a0).map_err(|e| e.to_string())?;
        let fd = central_difference(|b| closed_form_u(&params.with_beta(b), y_a0).unwrap_or(f64::NAN), beta, 1e-6);
        let gap = rel(exact, fd);
        worst = worst.max(gap);
        ensure(gap <= 1e-4, || format!("point {i} (alpha {alpha}, beta {beta}, f {fee}): {exact} vs {fd}"))?;
    }
    Ok(format!("100 points, worst rel gap {worst:.1e}"))
}

fn gas_statics() -> Outcome {
    let mut games = Vec::new();
    for alpha in [0.2, 0.5, 1.0] {
        for fee in [0.001, 0.003, 0.01] {
            let base = Game::new(MarketParams::unit(alpha, 0.0, fee), 1.0).map_err(|e| e.to_string())?;
            let beta2 = beta2_solve(&base).map_err(|e| e.to_string())?.unwrap_or(0.0);
            // slice of 40 shocks from zero to just past beta2
            for k in 0..40 {
                games.push(base.with_beta(1.1 * beta2 * k as f64 / 39.0));
            }
        }
    }
    let sweep = gas_fee_statics(&games, &[1.0, 2.0, 3.0, 10.0]).map_err(|e| e.to_string())?;
    ensure(sweep.violations.is_empty(), || sweep.violations.join("; "))?;

    let mut slices: BTreeMap<(u64, u64, u64), Vec<_>> = BTreeMap::new();
    let mut zero_rows = 0;
    for row in &sweep.rows {
        for (i, g2) in row.g2_by_event.iter().enumerate() {
            if row.beta <= row.beta1_by_event[i] {
                zero_rows += 1;
                ensure(*g2 == 0.0, || format!("g2 = {g2} below the threshold at {row:?}"))?;
            }
        }
        slices.entry((row.alpha.to_bits(), row.fee.to_bits(), row.y_a0.to_bits())).or_default().push(row);
    }
    let mut pairs = 0;
    for rows in slices.values() {
        for w in rows.windows(2) {
            if w[1].beta2.is_some_and(|b2| w[1].beta < b2) {
                pairs += 1;
                ensure(w[1].g2 >= w[0].g2, || format!("g2 decreases between {:?} and {:?}", w[0], w[1]))?;
            }
        }
    }
    let mut scaled = 0;
    for row in sweep.rows.iter().filter(|r| r.y_a0 != 1.0) {
        let base = sweep
            .rows
            .iter()
            .find(|r| r.y_a0 == 1.0 && r.alpha == row.alpha && r.beta == row.beta && r.fee == row.fee)
            .ok_or("missing unit-deposit row")?;
        for (got, want) in [(row.g1, base.g1 * row.y_a0), (row.g2, base.g2 * row.y_a0)] {
            ensure((got - want).abs() <= 1e-9 * want.abs(), || format!("scaling by {}: {got} vs {want}", row.y_a0))?;
        }
        scaled += 1;
    }
    Ok(format!(
        "{} rows: {pairs} monotone steps, {scaled} scaled rows, {zero_rows} below-threshold events with g2 = 0",
        sweep.rows.len()
    ))
}

#[derive(Clone, Copy)]
enum Op {
    Swap(Direction, f64),
    Deposit(f64),
    Withdraw(f64),
}

fn random_op(rng: &mut ChaCha8Rng) -> Op {
    match rng.gen_range(0..4) {
        0 | 1 => {
            let dir = if rng.gen_bool(0.5) { Direction::AForB } else { Direction::BForA };
            Op::Swap(dir, 10f64.powf(rng.gen_range(-6.0..1.0)))
        }
        2 => Op::Deposit(10f64.powf(rng.gen_range(-3.0..0.5))),
        _ => Op::Withdraw(rng.gen_range(0.0..0.9)),
    }
}

fn run_sequence(rng: &mut ChaCha8Rng, fee: f64, routing: FeeRouting) -> Result<(), String> {
    let (a, b) = (rng.gen_range(1.0..1e3), rng.gen_range(1.0..1e3));
    let mut pool = PoolState::with_reserves(a, b, fee).map_err(|e| e.to_string())?.with_fee_routing(routing);
    for _ in 0..rng.gen_range(1..20) {
        let op = random_op(rng);
        let before = pool.clone();
        match op {
            Op::Swap(dir, frac) => {
                let amount = frac * before.reserve(dir.input());
                let swap = before.execute_swap(amount, dir).map_err(|e| e.to_string())?;
                let (k0, k1) = (before.product(), swap.pool.product());
                let pricing = swap.pool.reserve(dir.input()) - match routing {
                    FeeRouting::IntoReserves => swap.fee_paid,
                    FeeRouting::HeldOutside => 0.0,
                };
                let pricing_product = pricing * swap.pool.reserve(dir.output());
                ensure(rel(pricing_product, k0) <= 1e-9, || format!("pricing product moved: {k0} -> {pricing_product}"))?;
                if fee == 0.0 || routing == FeeRouting::HeldOutside {
                    ensure(rel(k1, k0) <= 1e-9, || format!("constant product broken: {k0} -> {k1}"))?;
                } else {
                    ensure(k1 >= k0 * (1.0 - 1e-12), || format!("product fell with fees: {k0} -> {k1}"))?;
                }
                pool = swap.pool;
            }
            Op::Deposit(frac) => {
                let amount_a = frac * before.reserve_a();
                let amount_b = amount_a * before.reserve_b() / before.reserve_a();
                let p_b = before.reserve_a() / before.reserve_b();
                let (next, minted) = before.deposit(amount_a, amount_b, 1.0, p_b).map_err(|e| e.to_string())?;
                ensure(rel(minted / before.total_shares(), frac) <= 1e-9, || format!("minted {minted} for fraction {frac}"))?;
                for t in [Token::A, Token::B] {
                    let per_share = (before.reserve(t) / before.total_shares(), next.reserve(t) / next.total_shares());
                    ensure(rel(per_share.0, per_share.1) <= 1e-9, || "deposit diluted existing shares".into())?;
                }
                pool = next;
            }
            Op::Withdraw(frac) => {
                let shares = frac * before.total_shares();
                let w = before.withdraw(shares).map_err(|e| e.to_string())?;
                for (t, paid) in [(Token::A, w.amount_a), (Token::B, w.amount_b)] {
                    let due = frac * before.claimable(t);
                    ensure((paid - due).abs() <= 1e-9 * before.claimable(t), || {
                        format!("withdrew {paid} of {} for fraction {frac}", t.label())
                    })?;
                }
                pool = w.pool;
            }
        }
        ensure(pool.reserve_a() > 0.0 && pool.reserve_b() > 0.0, || format!("nonpositive reserves {:?}", pool.reserves()))?;
        ensure(pool.accrued_fees(Token::A) >= 0.0 && pool.accrued_fees(Token::B) >= 0.0, || "negative accrued fees".into())?;
    }
    Ok(())
}

fn pool_invariants() -> Outcome {
    let mut rng = rng(9);
    let mut counts = [0usize; 3];
    for i in 0..100_000 {
        let (fee, routing, bucket) = match i % 4 {
            0 => (0.0, FeeRouting::IntoReserves, 0),
            1 | 2 => (rng.gen_range(1e-4..0.05), FeeRouting::IntoReserves, 1),
            _ => (rng.gen_range(1e-4..0.05), FeeRouting::HeldOutside, 2),
        };
        counts[bucket] += 1;
        run_sequence(&mut rng, fee, routing).map_err(|e| format!("sequence {i}: {e}"))?;
    }
    Ok(format!(
        "100000 sequences ({} fee-free, {} fee into reserves, {} fee held outside)",
        counts[0], counts[1], counts[2]
    ))
}

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run_cli(command: &str, config: &Path, out: &Path) -> Result<Vec<u8>, String> {
    let status = Process::new(env!("CARGO_BIN_EXE_amm-sim"))
        .args([command, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!("{command} on {} failed: {}", config.display(), String::from_utf8_lossy(&status.stderr))
    })?;
    fs::read(out).map_err(|e| e.to_string())
}

fn check_single_flip(csv: &str) -> Result<usize, String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().ok_or("empty freeze map")?.split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).ok_or(format!("no `{name}` column"));
    let (ia, ib, ifr) = (col("alpha")?, col("beta")?, col("freeze")?);
    let mut columns: BTreeMap<String, Vec<(f64, bool)>> = BTreeMap::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let beta: f64 = fields[ib].parse().map_err(|_| format!("bad beta `{}`", fields[ib]))?;
        columns.entry(fields[ia].to_string()).or_default().push((beta, fields[ifr] == "true"));
    }
    for (alpha, mut cells) in columns.clone() {
        cells.sort_by(|a, b| a.0.total_cmp(&b.0));
        let flips = cells.windows(2).filter(|w| w[0].1 != w[1].1).count();
        ensure(flips == 1 && !cells[0].1 && cells[cells.len() - 1].1, || {
            format!("alpha {alpha}: {flips} flips, freeze at ends {} / {}", cells[0].1, cells[cells.len() - 1].1)
        })?;
    }
    Ok(columns.len())
}

fn cli_determinism() -> Outcome {
    let scratch = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-cli");
    fs::create_dir_all(&scratch).map_err(|e| e.to_string())?;
    let mut configs: Vec<PathBuf> = fs::read_dir(config_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "conf"))
        .collect();
    configs.sort();
    let mut flipped_columns = 0;
    let mut commands = Vec::new();
    for config in &configs {
        let stem = config.file_stem().and_then(|s| s.to_str()).ok_or("bad config name")?;
        let command = Command::from_str(stem, false).map_err(|_| format!("{stem}.conf names no subcommand"))?;
        let first = run_cli(stem, config, &scratch.join(format!("{stem}-1.csv")))?;
        let second = run_cli(stem, config, &scratch.join(format!("{stem}-2.csv")))?;
        ensure(first == second, || format!("{stem}: the two runs differ"))?;
        if command == Command::FreezeMap {
            flipped_columns += check_single_flip(&String::from_utf8_lossy(&first))?;
        }
        commands.push(stem.to_string());
    }
    ensure(commands.len() == Command::value_variants().len(), || {
        format!("shipped configs cover {commands:?}, expected one per subcommand")
    })?;
    ensure(flipped_columns > 0, || "no freeze-map config shipped".into())?;
    Ok(format!(
        "{} configs byte-identical across runs, {flipped_columns} freeze-map columns with one flip",
        configs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("closed-form arbitrage vs oracle", closed_form_arbitrage),
        ("threshold beta1 vs bisection", threshold_beta_one),
        ("investor trade vs oracle", investor_trade),
        ("fee-routing calibration", calibration),
        ("priority auction under equilibrium bids", priority_auction),
        ("freeze threshold beta2", freeze_threshold),
        ("dU/dbeta vs finite differences", derivative),
        ("gas-fee comparative statics", gas_statics),
        ("pool invariants", pool_invariants),
        ("CLI determinism and freeze map", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
