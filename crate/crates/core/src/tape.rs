//! Single-security trade tapes over an averaging window.
//!
//! A tape holds exactly one [`Trade`] per grid instant `tᵢ`, `i = 1..N`. Real
//! tick data is asynchronous, so [`bin_raw_trades`] maps ticks onto the grid
//! by splitting the window into `N` equal sub-intervals and aggregating each
//! one into a single trade priced at its VWAP.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::returns::ReturnSeries;
use crate::sum::{self, NeumaierSum};
use crate::INGEST_TOLERANCE;

/// The averaging interval `[t - Δ/2, t + Δ/2]` holding `N` trade instants
/// spaced `ε = Δ / N` apart. Times are integer nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AveragingWindow {
    center: i64,
    width: i64,
    trade_count: usize,
}

impl AveragingWindow {
    /// `width` must be positive, even, and a multiple of `trade_count`, so
    /// that both window bounds and every grid instant are whole nanoseconds
    /// and `N · ε = Δ` holds exactly.
    pub fn new(center: i64, width: i64, trade_count: usize) -> Result<Self> {
        if trade_count < 2 {
            return Err(Error::DegenerateWindow(trade_count));
        }
        if width <= 0 {
            return Err(Error::InvalidWindow("width must be positive"));
        }
        if width % 2 != 0 {
            return Err(Error::InvalidWindow("width must be an even number of nanoseconds"));
        }
        let n = i64::try_from(trade_count).map_err(|_| Error::InvalidWindow("trade count does not fit in i64"))?;
        if width % n != 0 {
            return Err(Error::InvalidWindow("width must be a multiple of the trade count"));
        }
        let half = width / 2;
        if center.checked_sub(half).is_none() || center.checked_add(half).is_none() {
            return Err(Error::InvalidWindow("window bounds overflow i64"));
        }
        Ok(Self {
            center,
            width,
            trade_count,
        })
    }

    /// Window starting at `start` instead of centered on a time.
    pub fn from_start(start: i64, width: i64, trade_count: usize) -> Result<Self> {
        let center = start
            .checked_add(width / 2)
            .ok_or(Error::InvalidWindow("window bounds overflow i64"))?;
        Self::new(center, width, trade_count)
    }

    pub fn center(&self) -> i64 {
        self.center
    }

    pub fn width(&self) -> i64 {
        self.width
    }

    pub fn trade_count(&self) -> usize {
        self.trade_count
    }

    /// Span `ε` between consecutive grid instants.
    pub fn span(&self) -> i64 {
        self.width / self.trade_count as i64
    }

    pub fn start(&self) -> i64 {
        self.center - self.width / 2
    }

    pub fn end(&self) -> i64 {
        self.center + self.width / 2
    }

    pub fn contains(&self, timestamp: i64) -> bool {
        (self.start()..=self.end()).contains(&timestamp)
    }

    /// Grid instant `tᵢ = start + i·ε` (the closing edge of sub-interval `i`).
    ///
    /// Panics if `i` is not in `1..=N`.
    pub fn instant(&self, i: usize) -> i64 {
        assert!((1..=self.trade_count).contains(&i), "grid index {i} out of range");
        self.start() + i as i64 * self.span()
    }

    /// 1-based sub-interval holding `timestamp`. Sub-intervals are half-open
    /// except the last, which also holds the window end.
    pub fn bin_of(&self, timestamp: i64) -> Option<usize> {
        if !self.contains(timestamp) {
            return None;
        }
        let offset = (timestamp - self.start()) / self.span();
        Some((offset as usize + 1).min(self.trade_count))
    }
}

/// One trade on the grid: `C(tᵢ) = p(tᵢ) · U(tᵢ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trade {
    index: usize,
    price: f64,
    volume: f64,
    value: f64,
}

impl Trade {
    /// Trade whose value is computed as `price * volume`.
    pub fn new(index: usize, price: f64, volume: f64) -> Self {
        Self::with_value(index, price, volume, price * volume)
    }

    /// Trade with an independently recorded value; [`validate_tape`] checks it.
    pub fn with_value(index: usize, price: f64, volume: f64, value: f64) -> Self {
        Self {
            index,
            price,
            volume,
            value,
        }
    }

    /// 1-based grid index.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    fn value_consistent(&self) -> bool {
        let expected = self.price * self.volume;
        libm::fabs(self.value - expected) <= INGEST_TOLERANCE * libm::fabs(self.value).max(1.0)
    }
}

/// The trades of one security during the window, plus its price at `t0`.
///
/// Construction does not validate; call [`validate_tape`] or
/// [`SecurityTape::checked`] first when the data comes from outside.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityTape {
    security_id: String,
    window: AveragingWindow,
    trades: Vec<Trade>,
    base_price: f64,
}

impl SecurityTape {
    pub fn new(security_id: impl Into<String>, window: AveragingWindow, trades: Vec<Trade>, base_price: f64) -> Self {
        Self {
            security_id: security_id.into(),
            window,
            trades,
            base_price,
        }
    }

    /// Like [`SecurityTape::new`] but fails with [`Error::InvalidTape`] if the
    /// tape has any violation.
    pub fn checked(
        security_id: impl Into<String>,
        window: AveragingWindow,
        trades: Vec<Trade>,
        base_price: f64,
    ) -> Result<Self> {
        let tape = Self::new(security_id, window, trades, base_price);
        let outcome = validate_tape(&tape);
        if outcome.is_ok() {
            Ok(tape)
        } else {
            Err(Error::InvalidTape {
                security: tape.security_id,
                violations: outcome.violations,
            })
        }
    }

    pub fn security_id(&self) -> &str {
        &self.security_id
    }

    pub fn window(&self) -> &AveragingWindow {
        &self.window
    }

    pub fn trades(&self) -> &[Trade] {
        &self.trades
    }

    /// Price `p(t0)` at portfolio composition time.
    pub fn base_price(&self) -> f64 {
        self.base_price
    }

    pub fn len(&self) -> usize {
        self.trades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trades.is_empty()
    }

    pub fn prices(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.trades.iter().map(Trade::price)
    }

    pub fn volumes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.trades.iter().map(Trade::volume)
    }

    pub fn values(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.trades.iter().map(Trade::value)
    }

    /// `U_Σ = Σᵢ U(tᵢ)`.
    pub fn total_volume(&self) -> f64 {
        sum::sum(self.volumes())
    }

    /// `C_Σ = Σᵢ C(tᵢ)`.
    pub fn total_value(&self) -> f64 {
        sum::sum(self.values())
    }
}

/// One problem found by [`validate_tape`]. Indices are 1-based grid indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    WrongTradeCount {
        expected: usize,
        found: usize,
    },
    IndexOutOfRange(usize),
    DuplicateIndex(usize),
    MissingIndex(usize),
    /// Trade at position `position` (1-based) is not in grid order.
    OutOfOrder {
        position: usize,
    },
    NonFinite(usize),
    NonpositivePrice(usize),
    NegativeVolume(usize),
    ValueMismatch(usize),
    ZeroTotalVolume,
    NonpositiveBasePrice,
}

impl Violation {
    /// Stable snake_case code for machine-readable listings.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::WrongTradeCount { .. } => "wrong_trade_count",
            Violation::IndexOutOfRange(_) => "index_out_of_range",
            Violation::DuplicateIndex(_) => "duplicate_index",
            Violation::MissingIndex(_) => "missing_index",
            Violation::OutOfOrder { .. } => "out_of_order",
            Violation::NonFinite(_) => "non_finite",
            Violation::NonpositivePrice(_) => "nonpositive_price",
            Violation::NegativeVolume(_) => "negative_volume",
            Violation::ValueMismatch(_) => "value_mismatch",
            Violation::ZeroTotalVolume => "zero_total_volume",
            Violation::NonpositiveBasePrice => "nonpositive_base_price",
        }
    }

    /// Grid index the violation refers to, if any.
    pub fn index(&self) -> Option<usize> {
        match *self {
            Violation::IndexOutOfRange(i)
            | Violation::DuplicateIndex(i)
            | Violation::MissingIndex(i)
            | Violation::NonFinite(i)
            | Violation::NonpositivePrice(i)
            | Violation::NegativeVolume(i)
            | Violation::ValueMismatch(i) => Some(i),
            Violation::OutOfOrder { position } => Some(position),
            Violation::WrongTradeCount { .. } | Violation::ZeroTotalVolume | Violation::NonpositiveBasePrice => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WrongTradeCount { expected, found } => {
                write!(f, "wrong trade count: expected {expected}, found {found}")
            }
            Violation::IndexOutOfRange(i) => write!(f, "index out of range at i={i}"),
            Violation::DuplicateIndex(i) => write!(f, "duplicate index at i={i}"),
            Violation::MissingIndex(i) => write!(f, "index gap at i={i}"),
            Violation::OutOfOrder { position } => write!(f, "out of order at position {position}"),
            Violation::NonFinite(i) => write!(f, "non-finite field at i={i}"),
            Violation::NonpositivePrice(i) => write!(f, "nonpositive price at i={i}"),
            Violation::NegativeVolume(i) => write!(f, "negative volume at i={i}"),
            Violation::ValueMismatch(i) => write!(f, "value mismatch at i={i}"),
            Violation::ZeroTotalVolume => f.write_str("zero total volume"),
            Violation::NonpositiveBasePrice => f.write_str("nonpositive base price"),
        }
    }
}

/// Result of [`validate_tape`]; violations are data, not errors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationOutcome {
    pub violations: Vec<Violation>,
}

impl ValidationOutcome {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, violation: &Violation) -> bool {
        self.violations.contains(violation)
    }
}

/// Checks grid coverage, price/volume signs, the `C = p·U` identity (to
/// `1e-9` relative) and that the security traded at all.
pub fn validate_tape(tape: &SecurityTape) -> ValidationOutcome {
    let n = tape.window.trade_count();
    let mut violations = Vec::new();

    if tape.trades.len() != n {
        violations.push(Violation::WrongTradeCount {
            expected: n,
            found: tape.trades.len(),
        });
    }

    let mut seen = vec![false; n];
    for (position, trade) in tape.trades.iter().enumerate() {
        let i = trade.index;
        if i == 0 || i > n {
            violations.push(Violation::IndexOutOfRange(i));
        } else if seen[i - 1] {
            violations.push(Violation::DuplicateIndex(i));
        } else {
            seen[i - 1] = true;
        }
        if position > 0 && tape.trades[position - 1].index >= i {
            violations.push(Violation::OutOfOrder { position: position + 1 });
        }

        if !(trade.price.is_finite() && trade.volume.is_finite() && trade.value.is_finite()) {
            violations.push(Violation::NonFinite(i));
            continue;
        }
        if trade.price <= 0.0 {
            violations.push(Violation::NonpositivePrice(i));
        }
        if trade.volume < 0.0 {
            violations.push(Violation::NegativeVolume(i));
        }
        if !trade.value_consistent() {
            violations.push(Violation::ValueMismatch(i));
        }
    }
    violations.extend(
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| !s)
            .map(|(k, _)| Violation::MissingIndex(k + 1)),
    );

    let total: f64 = sum::sum(
        tape.trades
            .iter()
            .map(Trade::volume)
            .filter(|v| v.is_finite() && *v > 0.0),
    );
    if total <= 0.0 {
        violations.push(Violation::ZeroTotalVolume);
    }
    if !(tape.base_price.is_finite() && tape.base_price > 0.0) {
        violations.push(Violation::NonpositiveBasePrice);
    }

    ValidationOutcome { violations }
}

/// An unbinned tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawTrade {
    /// Nanoseconds, same clock as the window.
    pub timestamp: i64,
    pub price: f64,
    pub volume: f64,
}

/// What to do when the first sub-interval has no ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeadingBinPolicy {
    /// Fail with [`Error::EmptyLeadingBin`].
    #[default]
    Strict,
    /// Price leading empty bins at the first observed bin price.
    BackFill,
}

#[derive(Default)]
struct Bin {
    value: NeumaierSum,
    volume: NeumaierSum,
    // (timestamp, price) of the latest tick
    last: Option<(i64, f64)>,
}

/// Aggregates ticks into one trade per sub-interval.
///
/// Volume and value are summed; the price is the sub-interval VWAP. A
/// sub-interval with ticks but zero volume takes the price of its latest
/// tick. An empty sub-interval gets zero volume and value and carries the
/// previous price forward.
pub fn bin_raw_trades(
    security_id: &str,
    raw: &[RawTrade],
    window: &AveragingWindow,
    base_price: f64,
    policy: LeadingBinPolicy,
) -> Result<SecurityTape> {
    if raw.is_empty() {
        return Err(Error::NoTrades(security_id.into()));
    }
    let n = window.trade_count();
    let mut bins: Vec<Bin> = (0..n).map(|_| Bin::default()).collect();

    for tick in raw {
        if !(tick.price.is_finite() && tick.price > 0.0) {
            return Err(Error::InvalidTrade {
                security: security_id.into(),
                reason: "price must be positive and finite",
            });
        }
        if !(tick.volume.is_finite() && tick.volume >= 0.0) {
            return Err(Error::InvalidTrade {
                security: security_id.into(),
                reason: "volume must be non-negative and finite",
            });
        }
        let k = window
            .bin_of(tick.timestamp)
            .ok_or_else(|| Error::TimestampOutOfWindow {
                security: security_id.into(),
                timestamp: tick.timestamp,
                start: window.start(),
                end: window.end(),
            })?;
        let bin = &mut bins[k - 1];
        bin.value += tick.price * tick.volume;
        bin.volume += tick.volume;
        if bin.last.is_none_or(|(t, _)| tick.timestamp >= t) {
            bin.last = Some((tick.timestamp, tick.price));
        }
    }

    let own_price = |bin: &Bin| -> Option<f64> {
        let volume = bin.volume.value();
        if volume > 0.0 {
            Some(bin.value.value() / volume)
        } else {
            bin.last.map(|(_, p)| p)
        }
    };

    let mut carried = match bins.first().and_then(own_price) {
        Some(p) => Some(p),
        None => match policy {
            LeadingBinPolicy::Strict => return Err(Error::EmptyLeadingBin(security_id.into())),
            LeadingBinPolicy::BackFill => bins.iter().find_map(own_price),
        },
    };

    let mut trades = Vec::with_capacity(n);
    for (k, bin) in bins.iter().enumerate() {
        let price = own_price(bin).or(carried).expect("at least one tick is binned");
        carried = Some(price);
        let volume = bin.volume.value();
        let value = if volume > 0.0 { bin.value.value() } else { 0.0 };
        trades.push(Trade::with_value(k + 1, price, volume, value));
    }

    Ok(SecurityTape::new(security_id, *window, trades, base_price))
}

/// First moments of a tape: `C(t)`, `C_Σ(t)`, `U(t)`, `U_Σ(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapeMoments {
    pub mean_value: f64,
    pub total_value: f64,
    pub mean_volume: f64,
    pub total_volume: f64,
}

pub fn tape_moments(tape: &SecurityTape) -> TapeMoments {
    let n = tape.len().max(1) as f64;
    let total_value = tape.total_value();
    let total_volume = tape.total_volume();
    TapeMoments {
        mean_value: total_value / n,
        total_value,
        mean_volume: total_volume / n,
        total_volume,
    }
}

/// Volume weighted average price `C_Σ / U_Σ`.
pub fn vwap(tape: &SecurityTape) -> Result<f64> {
    let total_volume = tape.total_volume();
    if !(total_volume > 0.0) {
        return Err(Error::ZeroTotalVolume(tape.security_id.clone()));
    }
    Ok(tape.total_value() / total_volume)
}

/// Gross returns `p(tᵢ)/p(t0)` and the mean return `vwap / p(t0)`, weighted
/// by the trade volumes `U(tᵢ)`.
pub fn security_returns(tape: &SecurityTape) -> Result<ReturnSeries> {
    let base = tape.base_price;
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::NonpositivePrice(tape.security_id.clone()));
    }
    let mean = vwap(tape)? / base;
    let random = tape.prices().map(|p| p / base).collect();
    let weights = tape.volumes().collect();
    Ok(ReturnSeries::new(base, random, mean, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rel_eq;

    fn window(n: usize) -> AveragingWindow {
        AveragingWindow::new(1_000, 2 * n as i64 * 10, n).unwrap()
    }

    fn tape(p0: f64, trades: &[(f64, f64, f64)]) -> SecurityTape {
        let w = window(trades.len());
        let trades = trades
            .iter()
            .enumerate()
            .map(|(k, &(p, u, c))| Trade::with_value(k + 1, p, u, c))
            .collect();
        SecurityTape::new("A", w, trades, p0)
    }

    #[test]
    fn window_rules() {
        assert_eq!(AveragingWindow::new(0, 10, 1), Err(Error::DegenerateWindow(1)));
        assert!(AveragingWindow::new(0, 9, 3).is_err());
        assert!(AveragingWindow::new(0, 10, 3).is_err());
        assert!(AveragingWindow::new(0, 0, 2).is_err());
        let w = AveragingWindow::new(100, 40, 4).unwrap();
        assert_eq!((w.start(), w.end(), w.span()), (80, 120, 10));
        assert_eq!(w.span() * w.trade_count() as i64, w.width());
        for i in 1..=4 {
            assert!(w.contains(w.instant(i)));
        }
        assert_eq!(w.bin_of(80), Some(1));
        assert_eq!(w.bin_of(89), Some(1));
        assert_eq!(w.bin_of(90), Some(2));
        assert_eq!(w.bin_of(120), Some(4));
        assert_eq!(w.bin_of(79), None);
        assert_eq!(w.bin_of(121), None);
        assert_eq!(AveragingWindow::from_start(80, 40, 4).unwrap(), w);
    }

    #[test]
    fn validate_accepts_exact_identity() {
        let t = tape(10.0, &[(10.0, 5.0, 50.0), (12.0, 5.0, 60.0)]);
        assert!(validate_tape(&t).is_ok());
        assert!(SecurityTape::checked("A", *t.window(), t.trades().to_vec(), 10.0).is_ok());
    }

    #[test]
    fn validate_flags_value_mismatch() {
        let t = tape(10.0, &[(10.0, 5.0, 51.0), (12.0, 5.0, 60.0)]);
        let outcome = validate_tape(&t);
        assert_eq!(outcome.violations, vec![Violation::ValueMismatch(1)]);
        assert_eq!(outcome.violations[0].to_string(), "value mismatch at i=1");
    }

    #[test]
    fn validate_tolerates_ingest_rounding() {
        let t = tape(10.0, &[(10.0, 5.0, 50.0 * (1.0 + 1e-11)), (12.0, 5.0, 60.0)]);
        assert!(validate_tape(&t).is_ok());
    }

    #[test]
    fn validate_flags_zero_total_volume() {
        let t = tape(10.0, &[(10.0, 0.0, 0.0), (12.0, 0.0, 0.0)]);
        let outcome = validate_tape(&t);
        assert!(outcome.contains(&Violation::ZeroTotalVolume));
        assert_eq!(outcome.violations[0].to_string(), "zero total volume");
    }

    #[test]
    fn validate_flags_index_problems_and_signs() {
        let w = window(3);
        let trades = vec![
            Trade::new(1, 10.0, 1.0),
            Trade::new(1, -1.0, 1.0),
            Trade::new(7, 10.0, -2.0),
        ];
        let outcome = validate_tape(&SecurityTape::new("A", w, trades, 0.0));
        for v in [
            Violation::DuplicateIndex(1),
            Violation::OutOfOrder { position: 2 },
            Violation::NonpositivePrice(1),
            Violation::IndexOutOfRange(7),
            Violation::NegativeVolume(7),
            Violation::MissingIndex(2),
            Violation::MissingIndex(3),
            Violation::NonpositiveBasePrice,
        ] {
            assert!(outcome.contains(&v), "missing {v:?} in {outcome:?}");
        }
        let short = SecurityTape::new("A", w, vec![Trade::new(1, 1.0, 1.0)], 1.0);
        assert!(validate_tape(&short).contains(&Violation::WrongTradeCount { expected: 3, found: 1 }));
    }

    #[test]
    fn checked_reports_violations() {
        let t = tape(10.0, &[(10.0, 0.0, 0.0), (12.0, 0.0, 0.0)]);
        let err = SecurityTape::checked("A", *t.window(), t.trades().to_vec(), 10.0).unwrap_err();
        assert!(matches!(err, Error::InvalidTape { violations, .. } if violations == vec![Violation::ZeroTotalVolume]));
    }

    #[test]
    fn binning_carries_price_forward() {
        let w = AveragingWindow::new(10, 20, 2).unwrap();
        let raw = [RawTrade {
            timestamp: 3,
            price: 10.0,
            volume: 5.0,
        }];
        let t = bin_raw_trades("A", &raw, &w, 10.0, LeadingBinPolicy::Strict).unwrap();
        assert_eq!(
            t.trades(),
            &[
                Trade::with_value(1, 10.0, 5.0, 50.0),
                Trade::with_value(2, 10.0, 0.0, 0.0)
            ]
        );
        assert!(validate_tape(&t).is_ok());
    }

    #[test]
    fn binning_uses_bin_vwap() {
        let w = AveragingWindow::new(10, 20, 2).unwrap();
        let raw = [
            RawTrade {
                timestamp: 1,
                price: 10.0,
                volume: 4.0,
            },
            RawTrade {
                timestamp: 5,
                price: 20.0,
                volume: 4.0,
            },
            RawTrade {
                timestamp: 15,
                price: 7.0,
                volume: 1.0,
            },
        ];
        let t = bin_raw_trades("A", &raw, &w, 10.0, LeadingBinPolicy::Strict).unwrap();
        // oracle: (10*4 + 20*4) = 120 over 8 shares
        assert_eq!(t.trades()[0], Trade::with_value(1, 15.0, 8.0, 120.0));
        assert_eq!(t.trades()[1], Trade::with_value(2, 7.0, 1.0, 7.0));
    }

    #[test]
    fn binning_rejects_out_of_window_and_empty_input() {
        let w = AveragingWindow::new(10, 20, 2).unwrap();
        let raw = [RawTrade {
            timestamp: -1,
            price: 10.0,
            volume: 4.0,
        }];
        assert!(matches!(
            bin_raw_trades("A", &raw, &w, 10.0, LeadingBinPolicy::Strict),
            Err(Error::TimestampOutOfWindow { timestamp: -1, .. })
        ));
        assert_eq!(
            bin_raw_trades("A", &[], &w, 10.0, LeadingBinPolicy::Strict),
            Err(Error::NoTrades("A".into()))
        );
    }

    #[test]
    fn leading_bin_policy() {
        let w = AveragingWindow::new(15, 30, 3).unwrap();
        let raw = [RawTrade {
            timestamp: 25,
            price: 12.0,
            volume: 2.0,
        }];
        assert_eq!(
            bin_raw_trades("A", &raw, &w, 10.0, LeadingBinPolicy::Strict),
            Err(Error::EmptyLeadingBin("A".into()))
        );
        let t = bin_raw_trades("A", &raw, &w, 10.0, LeadingBinPolicy::BackFill).unwrap();
        let prices: Vec<f64> = t.prices().collect();
        let volumes: Vec<f64> = t.volumes().collect();
        assert_eq!(prices, vec![12.0, 12.0, 12.0]);
        assert_eq!(volumes, vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn zero_volume_bin_with_ticks_takes_latest_tick_price() {
        let w = AveragingWindow::new(10, 20, 2).unwrap();
        let raw = [
            RawTrade {
                timestamp: 4,
                price: 11.0,
                volume: 0.0,
            },
            RawTrade {
                timestamp: 2,
                price: 9.0,
                volume: 0.0,
            },
            RawTrade {
                timestamp: 12,
                price: 10.0,
                volume: 3.0,
            },
        ];
        let t = bin_raw_trades("A", &raw, &w, 10.0, LeadingBinPolicy::Strict).unwrap();
        assert_eq!(t.trades()[0], Trade::with_value(1, 11.0, 0.0, 0.0));
    }

    #[test]
    fn moments_by_summation() {
        let t = tape(10.0, &[(10.0, 5.0, 50.0), (12.0, 5.0, 60.0)]);
        assert_eq!(
            tape_moments(&t),
            TapeMoments {
                mean_value: 55.0,
                total_value: 110.0,
                mean_volume: 5.0,
                total_volume: 10.0
            }
        );
        let t = tape(10.0, &[(10.0, 0.0, 0.0), (10.0, 4.0, 40.0)]);
        let m = tape_moments(&t);
        assert_eq!((m.total_volume, m.total_value), (4.0, 40.0));
        let t = tape(10.0, &[(3.0, 2.0, 6.0); 5]);
        let m = tape_moments(&t);
        assert_eq!((m.mean_value, m.mean_volume), (6.0, 2.0));
    }

    #[test]
    fn vwap_examples() {
        assert_eq!(vwap(&tape(10.0, &[(10.0, 5.0, 50.0), (12.0, 5.0, 60.0)])), Ok(11.0));
        assert_eq!(vwap(&tape(10.0, &[(10.0, 4.0, 40.0), (20.0, 4.0, 80.0)])), Ok(15.0));
        assert_eq!(
            vwap(&tape(10.0, &[(7.0, 1.0, 7.0), (7.0, 9.0, 63.0), (7.0, 3.0, 21.0)])),
            Ok(7.0)
        );
        assert_eq!(
            vwap(&tape(10.0, &[(10.0, 0.0, 0.0), (12.0, 0.0, 0.0)])),
            Err(Error::ZeroTotalVolume("A".into()))
        );
    }

    #[test]
    fn returns_examples() {
        let r = security_returns(&tape(10.0, &[(10.0, 5.0, 50.0), (12.0, 5.0, 60.0)])).unwrap();
        assert_eq!(r.random(), &[1.0, 1.2]);
        assert!(rel_eq(r.mean(), 1.1, 1e-15));

        let r = security_returns(&tape(10.0, &[(10.0, 9.0, 90.0), (20.0, 1.0, 20.0)])).unwrap();
        assert!(rel_eq(r.mean(), 1.1, 1e-15));
        let unweighted = r.random().iter().sum::<f64>() / 2.0;
        assert_eq!(unweighted, 1.5);
        assert!(rel_eq(r.weighted_mean(), r.mean(), 1e-12));

        let r = security_returns(&tape(4.0, &[(4.0, 1.0, 4.0), (4.0, 2.0, 8.0)])).unwrap();
        assert_eq!(r.random(), &[1.0, 1.0]);
        assert_eq!(r.mean(), 1.0);
        assert_eq!(r.net(), vec![0.0, 0.0]);
    }
}
