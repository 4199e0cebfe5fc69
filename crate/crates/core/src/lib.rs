#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Trade-tape analytics for a fixed portfolio.
//!
//! An investor holds fixed numbers of shares of `J` securities and does not
//! trade them. The market trades those securities during an averaging window
//! of `N` consecutive trade instants. This crate turns the constituents' trade
//! tapes into one synthetic tape that trades the whole portfolio as if it were
//! a single security, then compares two portfolio variances:
//!
//! * the Markowitz variance, a quadratic form of the security return
//!   covariance in the value weights, which is exact only when every trade
//!   volume is constant over the window;
//! * the market-based variance, built from the coefficients of variation of
//!   the portfolio trade values and volumes, which accounts for random trade
//!   volumes.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI and
//! anything touching the filesystem live in the companion `tapevar-cli` crate.
//!
//! # Pipeline
//!
//! 1. [`tape`]: per-security tapes on a uniform grid, VWAP and gross returns.
//! 2. [`portfolio`]: holdings at `t0`, the λ normalization, the portfolio tape.
//! 3. [`returns`]: portfolio returns and their decompositions.
//! 4. [`variance`]: Markowitz, market-based and Taylor-approximate variances.
//! 5. [`sim`]: seeded synthetic tapes and divergence sweeps.
//!
//! # Features
//! - `serde`: derives `Serialize`/`Deserialize` for reports, sweep rows and
//!   simulator configs.

extern crate alloc;

pub mod error;
pub mod portfolio;
pub mod returns;
pub mod sim;
pub mod sum;
pub mod tape;
pub mod variance;

pub use crate::error::{Error, Result};
pub use crate::portfolio::{
    assemble, build_portfolio_tape, lambda_factor, normalize_tape, Holding, NormalizedTape, PortfolioSpec,
    PortfolioTape,
};
pub use crate::returns::{
    markowitz_random_returns, mean_return_decomposition, portfolio_returns, random_return_decomposition,
    relative_volumes, security_return_map, RelativeVolumeSeries, ReturnSeries, SecurityReturns,
};
pub use crate::sim::{
    divergence_experiment, generate_replication, generate_tape, SecuritySim, SimConfig, SweepConfig, SweepRow,
};
pub use crate::tape::{
    bin_raw_trades, security_returns, tape_moments, validate_tape, vwap, AveragingWindow, LeadingBinPolicy, RawTrade,
    SecurityTape, TapeMoments, Trade, ValidationOutcome, Violation,
};
pub use crate::variance::{
    analyze, clamp_variance, divergence, full_report, market_based_variance, markowitz_covariance,
    markowitz_covariance_weighted, markowitz_variance, taylor_variance, trade_moments, CovarianceMatrix,
    CovarianceWeighting, ReportOptions, TradeMoments, VarianceReport,
};

/// Relative tolerance for identities on ingested data, which may be rounded.
pub const INGEST_TOLERANCE: f64 = 1e-9;

/// Relative tolerance for identities on internally computed quantities.
pub const COMPUTE_TOLERANCE: f64 = 1e-12;

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    let scale = 1.0_f64.max(libm::fabs(a)).max(libm::fabs(b));
    libm::fabs(a - b) <= tol * scale
}

/// `|a - b| <= tol * max(|a|, |b|)`, with exact equality required at zero.
pub fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    let scale = libm::fabs(a).max(libm::fabs(b));
    libm::fabs(a - b) <= tol * scale
}
