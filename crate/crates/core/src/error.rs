use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::tape::Violation;

/// Domain errors. Messages start with the error kind so command-line
/// diagnostics are easy to grep.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Fewer than two trade instants in the window.
    #[error("DegenerateWindow need at least 2 trade instants, got {0}")]
    DegenerateWindow(usize),

    #[error("InvalidWindow {0}")]
    InvalidWindow(&'static str),

    /// Strict binning found no trade in the first sub-interval, so there is
    /// no price to carry forward.
    #[error("EmptyLeadingBin {0}: first sub-interval has no trades")]
    EmptyLeadingBin(String),

    #[error("TimestampOutOfWindow {security}: timestamp {timestamp} outside [{start}, {end}]")]
    TimestampOutOfWindow {
        security: String,
        timestamp: i64,
        start: i64,
        end: i64,
    },

    #[error("NoTrades {0}")]
    NoTrades(String),

    #[error("InvalidTrade {security}: {reason}")]
    InvalidTrade { security: String, reason: &'static str },

    #[error("InvalidTape {security}: {} violation(s)", violations.len())]
    InvalidTape {
        security: String,
        violations: Vec<Violation>,
    },

    #[error("ZeroTotalVolume {0}")]
    ZeroTotalVolume(String),

    #[error("SecurityMismatch expected {expected}, found {found}")]
    SecurityMismatch { expected: String, found: String },

    #[error("EmptyPortfolio")]
    EmptyPortfolio,

    #[error("DuplicateSecurity {0}")]
    DuplicateSecurity(String),

    #[error("NonpositiveShares {0}")]
    NonpositiveShares(String),

    #[error("NonpositivePrice {0}")]
    NonpositivePrice(String),

    /// A holding has no tape (or return series) supplied.
    #[error("MissingSecurity {0}")]
    MissingSecurity(String),

    /// A tape was supplied for a security that is not held.
    #[error("UnknownSecurity {0}")]
    UnknownSecurity(String),

    #[error("WindowMismatch {0}")]
    WindowMismatch(String),

    /// The aggregate normalized volume `W(tᵢ)` is zero, so `s(tᵢ)` is undefined.
    #[error("ZeroPortfolioVolumeAtInstant i={0}")]
    ZeroPortfolioVolumeAtInstant(usize),

    #[error("LengthMismatch expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("DimensionMismatch expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A variance came out below `-1e-12`; rounding cannot explain that.
    #[error("NegativeVariance {0}")]
    NegativeVariance(f64),

    #[error("InvalidConfig {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
