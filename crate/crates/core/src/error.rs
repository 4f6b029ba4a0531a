use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no liquidity: pool reserves are empty")]
    NoLiquidity,

    #[error("invalid amount {0}: amounts must be finite and nonnegative")]
    InvalidAmount(f64),

    #[error("swap would drain the output reserve (out {amount_out} >= reserve {reserve_out})")]
    PoolDrained { amount_out: f64, reserve_out: f64 },

    #[error("value mismatch: deposit legs are worth {value_a} and {value_b}")]
    ValueMismatch { value_a: f64, value_b: f64 },

    #[error("ratio mismatch: deposit ratio {deposit} differs from reserve ratio {reserves}")]
    RatioMismatch { deposit: f64, reserves: f64 },

    #[error("cannot withdraw {requested} shares, only {available} outstanding")]
    InsufficientShares { requested: f64, available: f64 },

    #[error("pool is not value-balanced at the given prices ({value_a} vs {value_b})")]
    UnbalancedPool { value_a: f64, value_b: f64 },

    #[error("no arbitrage regime: beta {beta} does not exceed threshold {beta1}")]
    NoArbitrageRegime { beta: f64, beta1: f64 },

    #[error("the model needs at least two arbitrageurs, got {0}")]
    TooFewArbitrageurs(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("outside model domain: {0}")]
    OutsideModelDomain(&'static str),

    #[error("no sign change of the LP payoff below the scan cap (last bracket [{lo}, {hi}])")]
    ScanCapExhausted { lo: f64, hi: f64 },
}
