//! Batch front-end: scenario files in, CSV tables out.
//!
//! # Config grammar
//!
//! One `key = value` pair per line. `#` starts a comment, blank lines are
//! ignored, keys may appear at most once.
//!
//! | key              | value                          | default  |
//! |------------------|--------------------------------|----------|
//! | `p_a`, `p_b`     | positive number                | `1`      |
//! | `alpha`, `beta`  | nonnegative number             | `0`      |
//! | `f`              | number in `[0, 1)`             | `0.003`  |
//! | `y_a0`           | positive number                | `1`      |
//! | `n_lps`          | integer >= 2                   | `2`      |
//! | `m_arbitrageurs` | integer >= 2                   | `2`      |
//! | `lp_fractions`   | comma list summing to 1        | equal    |
//! | `sweep.<p>`      | `start, stop, steps`           | none     |
//!
//! `<p>` is one of `alpha`, `beta`, `f`, `y_a0`. A sweep replaces the scalar
//! value of its parameter with `steps` evenly spaced points from `start` to
//! `stop` inclusive. The deposit of token B is always `y_a0 * p_a / p_b`.
//! Grid points are visited with `alpha` outermost, then `beta`, `f`, `y_a0`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use clap::ValueEnum;
use rayon::prelude::*;
use thiserror::Error;

use crate::agents::MarketParams;
use crate::equilibrium::{
    beta2_solve, gas_fee_statics, initial_beta_one, post_trade_beta_one, GasRow,
};
use crate::error::Error;
use crate::game::{calibrate, closed_form_u, Game, Trajectory, CALIBRATION_TOLERANCE};
use crate::oracle::{scan_beta2, OracleConfig};
use crate::pool::CALIBRATED_FEE_ROUTING;

/// Resolution of the oracle sign scan reported by `thresholds --oracle`.
pub const ORACLE_SCAN_RESOLUTION: f64 = 1e-4;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// One row per event and grid point.
    Playout,
    /// Enumerated and closed-form expected LP payoff with their gap.
    Expected,
    /// Arbitrage and freeze thresholds.
    Thresholds,
    /// Freeze verdict over the alpha x beta grid.
    FreezeMap,
    /// Gas fees over the grid, with monotonicity and scaling checks.
    GasSweep,
    /// Fee-routing calibration of the engine against the closed form.
    Calibrate,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("domain error: {0}")]
    Domain(#[from] Error),

    #[error("check failed: {0}")]
    Check(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 1,
            CliError::Domain(_) | CliError::Check(_) | CliError::Io(_) => 2,
        }
    }

    fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        CliError::Config { line, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.stop } else { self.start + h * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub p_a: f64,
    pub p_b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub f: f64,
    pub y_a0: f64,
    pub n_lps: usize,
    pub m_arbitrageurs: usize,
    pub lp_fractions: Vec<f64>,
    pub sweep_alpha: Option<Range>,
    pub sweep_beta: Option<Range>,
    pub sweep_f: Option<Range>,
    pub sweep_y_a0: Option<Range>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            p_a: 1.0,
            p_b: 1.0,
            alpha: 0.0,
            beta: 0.0,
            f: 0.003,
            y_a0: 1.0,
            n_lps: 2,
            m_arbitrageurs: 2,
            lp_fractions: vec![0.5, 0.5],
            sweep_alpha: None,
            sweep_beta: None,
            sweep_f: None,
            sweep_y_a0: None,
        }
    }
}

fn parse_number(line: usize, key: &str, raw: &str) -> Result<f64, CliError> {
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| CliError::config(Some(line), format!("`{key}`: cannot parse `{}` as a number", raw.trim())))?;
    if !value.is_finite() {
        return Err(CliError::config(Some(line), format!("`{key}` must be finite")));
    }
    Ok(value)
}

fn parse_count(line: usize, key: &str, raw: &str) -> Result<usize, CliError> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::config(Some(line), format!("`{key}`: expected a nonnegative integer, got `{}`", raw.trim())))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = ScenarioConfig::default();
        let mut seen: Vec<String> = Vec::new();
        let mut n_lps_line = None;
        let mut fractions_line = None;
        for (index, raw_line) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::config(Some(line), format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(CliError::config(Some(line), format!("duplicate key `{key}`")));
            }
            seen.push(key.to_string());
            match key {
                "p_a" => cfg.p_a = parse_number(line, key, value)?,
                "p_b" => cfg.p_b = parse_number(line, key, value)?,
                "alpha" => cfg.alpha = parse_number(line, key, value)?,
                "beta" => cfg.beta = parse_number(line, key, value)?,
                "f" => cfg.f = parse_number(line, key, value)?,
                "y_a0" => cfg.y_a0 = parse_number(line, key, value)?,
                "n_lps" => {
                    cfg.n_lps = parse_count(line, key, value)?;
                    n_lps_line = Some(line);
                }
                "m_arbitrageurs" => cfg.m_arbitrageurs = parse_count(line, key, value)?,
                "lp_fractions" => {
                    cfg.lp_fractions = value
                        .split(',')
                        .map(|v| parse_number(line, key, v))
                        .collect::<Result<_, _>>()?;
                    fractions_line = Some(line);
                }
                _ => {
                    let Some(param) = key.strip_prefix("sweep.") else {
                        return Err(CliError::config(Some(line), format!("unknown key `{key}`")));
                    };
                    let parts: Vec<&str> = value.split(',').collect();
                    if parts.len() != 3 {
                        return Err(CliError::config(Some(line), format!("`{key}` needs `start, stop, steps`")));
                    }
                    let range = Range {
                        start: parse_number(line, key, parts[0])?,
                        stop: parse_number(line, key, parts[1])?,
                        steps: parse_count(line, key, parts[2])?,
                    };
                    if range.steps == 0 {
                        return Err(CliError::config(Some(line), format!("`{key}` must have at least one step")));
                    }
                    let slot = match param {
                        "alpha" => &mut cfg.sweep_alpha,
                        "beta" => &mut cfg.sweep_beta,
                        "f" => &mut cfg.sweep_f,
                        "y_a0" => &mut cfg.sweep_y_a0,
                        _ => return Err(CliError::config(Some(line), format!("cannot sweep `{param}`"))),
                    };
                    *slot = Some(range);
                }
            }
        }
        match (n_lps_line, fractions_line) {
            (Some(_), None) | (None, None) => {
                if cfg.n_lps >= 2 {
                    cfg.lp_fractions = vec![1.0 / cfg.n_lps as f64; cfg.n_lps];
                }
            }
            (None, Some(_)) => cfg.n_lps = cfg.lp_fractions.len(),
            (Some(_), Some(line)) => {
                if cfg.n_lps != cfg.lp_fractions.len() {
                    return Err(CliError::config(
                        Some(line),
                        format!("{} LP fractions given for n_lps = {}", cfg.lp_fractions.len(), cfg.n_lps),
                    ));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(None, format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        let total: f64 = self.lp_fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(CliError::config(None, format!("`lp_fractions` sum to {total}, not 1")));
        }
        for point in self.points() {
            Game::new(point, self.y_a0)
                .and_then(|g| g.with_lp_fractions(self.lp_fractions.clone()))
                .map_err(|e| CliError::config(None, e.to_string()))?;
        }
        for y in self.y_a0_values() {
            if y.is_nan() || y <= 0.0 {
                return Err(CliError::config(None, format!("deposit `y_a0` must be positive, got {y}")));
            }
        }
        Ok(())
    }

    fn values(scalar: f64, sweep: Option<Range>) -> Vec<f64> {
        sweep.map_or_else(|| vec![scalar], |r| r.values())
    }

    pub fn alpha_values(&self) -> Vec<f64> {
        Self::values(self.alpha, self.sweep_alpha)
    }

    pub fn beta_values(&self) -> Vec<f64> {
        Self::values(self.beta, self.sweep_beta)
    }

    pub fn f_values(&self) -> Vec<f64> {
        Self::values(self.f, self.sweep_f)
    }

    pub fn y_a0_values(&self) -> Vec<f64> {
        Self::values(self.y_a0, self.sweep_y_a0)
    }

    fn base_params(&self) -> MarketParams {
        MarketParams {
            p_a: self.p_a,
            p_b: self.p_b,
            alpha: self.alpha,
            beta: self.beta,
            fee: self.f,
            n_lps: self.lp_fractions.len(),
            n_arbitrageurs: self.m_arbitrageurs,
        }
    }

    /// Every `(alpha, beta, f)` combination, alpha outermost.
    fn points(&self) -> Vec<MarketParams> {
        let base = self.base_params();
        let mut out = Vec::new();
        for alpha in self.alpha_values() {
            for beta in self.beta_values() {
                for f in self.f_values() {
                    out.push(base.with_alpha(alpha).with_beta(beta).with_fee(f));
                }
            }
        }
        out
    }

    fn game(&self, params: MarketParams, y_a0: f64) -> Result<Game, Error> {
        Game::new(params, y_a0)?.with_lp_fractions(self.lp_fractions.clone())
    }

    /// Every grid point including deposit size, in config order.
    pub fn games(&self) -> Result<Vec<Game>, Error> {
        let mut out = Vec::new();
        for params in self.points() {
            for y in self.y_a0_values() {
                out.push(self.game(params, y)?);
            }
        }
        Ok(out)
    }
}

/// Output of one subcommand: the CSV text plus notes for the terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub csv: String,
    pub notes: Vec<String>,
}

struct Table {
    out: String,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        let mut out = columns.join(",");
        out.push('\n');
        Table { out }
    }

    fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        for (i, field) in fields.iter().enumerate() {
            if i > 0 {
                self.out.push(',');
            }
            self.out.push_str(field.as_ref());
        }
        self.out.push('\n');
    }
}

fn point_fields(game: &Game) -> Vec<String> {
    let p = &game.params;
    vec![format_number(p.alpha), format_number(p.beta), format_number(p.fee), format_number(game.y_a0())]
}

const POINT_COLUMNS: [&str; 4] = ["alpha", "beta", "f", "y_a0"];

fn optional(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

fn with_point(extra: &[&'static str]) -> Vec<&'static str> {
    POINT_COLUMNS.iter().chain(extra).copied().collect()
}

fn render_playout(cfg: &ScenarioConfig) -> Result<Rendered, CliError> {
    let games = cfg.games()?;
    let trajectories = games
        .par_iter()
        .map(|g| g.playouts())
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&with_point(&Trajectory::COLUMNS));
    for (game, events) in games.iter().zip(&trajectories) {
        for t in events {
            let mut fields = point_fields(game);
            fields.extend(t.flat_record());
            table.row(&fields);
        }
    }
    Ok(Rendered { csv: table.out, notes: Vec::new() })
}

fn render_expected(cfg: &ScenarioConfig) -> Result<Rendered, CliError> {
    let games = cfg.games()?;
    let rows = games
        .par_iter()
        .map(|g| -> Result<_, Error> {
            let engine = g.expected_lp_payoff()?;
            let closed = closed_form_u(&g.params, g.y_a0())?;
            Ok((engine, closed, g.closed_form_applies()?))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&with_point(&[
        "u_enumerated",
        "u_closed_form",
        "abs_gap",
        "rel_gap",
        "closed_form_applies",
    ]));
    let mut worst: f64 = 0.0;
    for (game, (engine, closed, applies)) in games.iter().zip(rows) {
        let gap = (engine - closed).abs();
        let rel = gap / closed.abs();
        if applies {
            worst = worst.max(rel);
        }
        let mut fields = point_fields(game);
        fields.extend([
            format_number(engine),
            format_number(closed),
            format_number(gap),
            format_number(rel),
            applies.to_string(),
        ]);
        table.row(&fields);
    }
    Ok(Rendered {
        csv: table.out,
        notes: vec![format!("largest relative gap where the closed form applies: {worst:.3e}")],
    })
}

fn render_thresholds(cfg: &ScenarioConfig, oracle: bool) -> Result<Rendered, CliError> {
    // beta does not enter the thresholds; one row per (alpha, f, y_a0)
    let collapsed = ScenarioConfig { sweep_beta: None, ..cfg.clone() };
    let games = collapsed.games()?;
    let mut columns = vec!["alpha", "f", "y_a0", "beta1", "beta1_post_trade", "beta2"];
    if oracle {
        columns.extend(["beta2_scan_lo", "beta2_scan_hi"]);
    }
    let rows = games
        .par_iter()
        .map(|g| -> Result<Vec<String>, Error> {
            let mut fields = vec![
                format_number(g.params.alpha),
                format_number(g.params.fee),
                format_number(g.y_a0()),
                format_number(initial_beta_one(g)?),
                format_number(post_trade_beta_one(g)?),
                optional(beta2_solve(g)?),
            ];
            if oracle {
                let (lo, hi) = scan_beta2(g, ORACLE_SCAN_RESOLUTION, &OracleConfig::default())?;
                fields.extend([format_number(lo), format_number(hi)]);
            }
            Ok(fields)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&columns);
    for fields in rows {
        table.row(&fields);
    }
    Ok(Rendered { csv: table.out, notes: Vec::new() })
}

fn render_freeze_map(cfg: &ScenarioConfig) -> Result<Rendered, CliError> {
    let games = cfg.games()?;
    let rows = games
        .par_iter()
        .map(|g| closed_form_u(&g.params, g.y_a0()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&with_point(&["u", "freeze"]));
    for (game, u) in games.iter().zip(rows) {
        let mut fields = point_fields(game);
        fields.extend([format_number(u), (u < 0.0).to_string()]);
        table.row(&fields);
    }
    Ok(Rendered { csv: table.out, notes: Vec::new() })
}

fn gas_fields(row: &GasRow) -> Vec<String> {
    let mut fields = vec![
        format_number(row.alpha),
        format_number(row.beta),
        format_number(row.fee),
        format_number(row.y_a0),
        format_number(row.g1),
        format_number(row.g2),
    ];
    fields.extend(row.g2_by_event.iter().map(|g| format_number(*g)));
    fields.push(optional(row.beta2));
    fields.push(row.excluded.to_string());
    fields
}

fn render_gas_sweep(cfg: &ScenarioConfig) -> Result<Rendered, CliError> {
    let games = cfg
        .points()
        .into_iter()
        .map(|p| cfg.game(p, cfg.y_a0))
        .collect::<Result<Vec<_>, _>>()?;
    let sweep = gas_fee_statics(&games, &cfg.y_a0_values())?;
    let mut table = Table::new(&with_point(&[
        "g1", "g2", "g2_AA", "g2_AB", "g2_BA", "g2_BB", "beta2", "excluded",
    ]));
    for row in &sweep.rows {
        table.row(&gas_fields(row));
    }
    Ok(Rendered { csv: table.out, notes: sweep.violations })
}

fn render_calibrate(cfg: &ScenarioConfig) -> Result<Rendered, CliError> {
    let report = calibrate(&cfg.games()?)?;
    let mut table = Table::new(&[
        "convention",
        "alpha",
        "beta",
        "f",
        "y_a0",
        "u_enumerated",
        "u_closed_form",
        "rel_gap",
        "within_tolerance",
    ]);
    for cell in &report.cells {
        table.row(&[
            cell.routing.name().to_string(),
            format_number(cell.alpha),
            format_number(cell.beta),
            format_number(cell.fee),
            format_number(cell.y_a0),
            format_number(cell.u_enumerated),
            format_number(cell.u_closed_form),
            format_number(cell.rel_gap),
            (cell.rel_gap <= CALIBRATION_TOLERANCE).to_string(),
        ]);
    }
    let mut notes: Vec<String> = report
        .summary()
        .iter()
        .map(|(routing, passed, total)| format!("{}: {passed}/{total} cells within {CALIBRATION_TOLERANCE:e}", routing.name()))
        .collect();
    match report.selected() {
        Some(routing) => notes.push(format!("calibrated convention: {}", routing.name())),
        None => notes.push("calibrated convention: none (no unique passing convention)".into()),
    }
    Ok(Rendered { csv: table.out, notes })
}

/// Computes a subcommand's output without touching the filesystem.
pub fn render(command: Command, cfg: &ScenarioConfig, oracle: bool) -> Result<Rendered, CliError> {
    match command {
        Command::Playout => render_playout(cfg),
        Command::Expected => render_expected(cfg),
        Command::Thresholds => render_thresholds(cfg, oracle),
        Command::FreezeMap => render_freeze_map(cfg),
        Command::GasSweep => render_gas_sweep(cfg),
        Command::Calibrate => render_calibrate(cfg),
    }
}

/// Loads the config, renders the table and writes it to `out`. Failed checks
/// (gas-sweep violations, a calibration with no unique passing convention)
/// still write the table before returning an error.
pub fn run(command: Command, config: &Path, out: &Path, oracle: bool) -> Result<Vec<String>, CliError> {
    let cfg = ScenarioConfig::load(config)?;
    let rendered = render(command, &cfg, oracle)?;
    fs::write(out, &rendered.csv)?;
    match command {
        Command::GasSweep if !rendered.notes.is_empty() => {
            let mut message = String::new();
            for note in &rendered.notes {
                let _ = writeln!(message, "{note}");
            }
            Err(CliError::Check(message.trim_end().to_string()))
        }
        Command::Calibrate => {
            let selected = rendered.notes.last().cloned().unwrap_or_default();
            let expected = format!("calibrated convention: {}", CALIBRATED_FEE_ROUTING.name());
            if selected == expected {
                Ok(rendered.notes)
            } else {
                Err(CliError::Check(rendered.notes.join("\n")))
            }
        }
        _ => Ok(rendered.notes),
    }
}
