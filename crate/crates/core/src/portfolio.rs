//! Fixed holdings at `t0` and the synthetic portfolio trade tape.
//!
//! Each security's market trades are scaled by `λ_j = U_j(t0) / U_Σj(t)` so
//! the scaled volumes sum to the shares held. Summing the scaled values and
//! volumes across securities at every instant gives the trades `Q(tᵢ)`,
//! `W(tᵢ)` of the portfolio viewed as one security, priced at
//! `s(tᵢ) = Q(tᵢ) / W(tᵢ)`.
//!
//! Holdings are kept sorted by security id and every cross-security sum runs
//! in that order, so the result does not depend on input order.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sum::{self, NeumaierSum};
use crate::tape::{AveragingWindow, SecurityTape};

/// Shares of one security held since `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Holding {
    security_id: String,
    shares: f64,
    base_price: f64,
    base_value: f64,
}

impl Holding {
    pub fn security_id(&self) -> &str {
        &self.security_id
    }

    /// `U_j(t0)`.
    pub fn shares(&self) -> f64 {
        self.shares
    }

    /// `p_j(t0)`.
    pub fn base_price(&self) -> f64 {
        self.base_price
    }

    /// `C_j(t0) = p_j(t0) · U_j(t0)`.
    pub fn base_value(&self) -> f64 {
        self.base_value
    }
}

/// Portfolio composition at `t0` with its derived totals and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSpec {
    holdings: Vec<Holding>,
    total_value: f64,
    total_shares: f64,
    share_price: f64,
    value_weights: Vec<f64>,
    share_weights: Vec<f64>,
}

impl PortfolioSpec {
    /// Builds the spec from `(security_id, shares, base_price)` triples.
    pub fn new<I, S>(holdings: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64, f64)>,
        S: Into<String>,
    {
        let mut list = Vec::new();
        for (id, shares, price) in holdings {
            let security_id = id.into();
            if !(shares.is_finite() && shares > 0.0) {
                return Err(Error::NonpositiveShares(security_id));
            }
            if !(price.is_finite() && price > 0.0) {
                return Err(Error::NonpositivePrice(security_id));
            }
            list.push(Holding {
                security_id,
                shares,
                base_price: price,
                base_value: price * shares,
            });
        }
        if list.is_empty() {
            return Err(Error::EmptyPortfolio);
        }
        list.sort_by(|a, b| a.security_id.cmp(&b.security_id));
        if let Some(dup) = list.windows(2).find(|w| w[0].security_id == w[1].security_id) {
            return Err(Error::DuplicateSecurity(dup[0].security_id.clone()));
        }

        let total_value = sum::sum(list.iter().map(Holding::base_value));
        let total_shares = sum::sum(list.iter().map(Holding::shares));
        let value_weights = list.iter().map(|h| h.base_value / total_value).collect();
        let share_weights = list.iter().map(|h| h.shares / total_shares).collect();
        Ok(Self {
            holdings: list,
            total_value,
            total_shares,
            share_price: total_value / total_shares,
            value_weights,
            share_weights,
        })
    }

    /// Holdings in ascending security id order.
    pub fn holdings(&self) -> &[Holding] {
        &self.holdings
    }

    pub fn len(&self) -> usize {
        self.holdings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holdings.is_empty()
    }

    pub fn position(&self, security_id: &str) -> Option<usize> {
        self.holdings
            .binary_search_by(|h| h.security_id.as_str().cmp(security_id))
            .ok()
    }

    pub fn holding(&self, security_id: &str) -> Option<&Holding> {
        self.position(security_id).map(|k| &self.holdings[k])
    }

    pub fn security_ids(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.holdings.iter().map(Holding::security_id)
    }

    /// `Q_Σ(t0) = Σ_j C_j(t0)`.
    pub fn total_value(&self) -> f64 {
        self.total_value
    }

    /// `W_Σ(t0) = Σ_j U_j(t0)`.
    pub fn total_shares(&self) -> f64 {
        self.total_shares
    }

    /// `s(t0) = Q_Σ(t0) / W_Σ(t0)`.
    pub fn share_price(&self) -> f64 {
        self.share_price
    }

    /// `X_j(t0) = C_j(t0) / Q_Σ(t0)`, in holding order.
    pub fn value_weights(&self) -> &[f64] {
        &self.value_weights
    }

    /// `x_j(t0) = U_j(t0) / W_Σ(t0)`, in holding order.
    pub fn share_weights(&self) -> &[f64] {
        &self.share_weights
    }
}

/// `λ_j = U_j(t0) / U_Σj(t)`.
pub fn lambda_factor(holding: &Holding, tape: &SecurityTape) -> Result<f64> {
    if holding.security_id != tape.security_id() {
        return Err(Error::SecurityMismatch {
            expected: holding.security_id.clone(),
            found: tape.security_id().into(),
        });
    }
    let total_volume = tape.total_volume();
    if !(total_volume > 0.0) {
        return Err(Error::ZeroTotalVolume(holding.security_id.clone()));
    }
    Ok(holding.shares / total_volume)
}

/// A security tape scaled by `λ_j`: `c_j(tᵢ) = λ_j C_j(tᵢ)`, `u_j(tᵢ) = λ_j U_j(tᵢ)`.
/// Prices are unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTape {
    security_id: String,
    window: AveragingWindow,
    lambda: f64,
    prices: Vec<f64>,
    values: Vec<f64>,
    volumes: Vec<f64>,
}

impl NormalizedTape {
    pub fn security_id(&self) -> &str {
        &self.security_id
    }

    pub fn window(&self) -> &AveragingWindow {
        &self.window
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// `c_j(tᵢ)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `u_j(tᵢ)`.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// `Σᵢ u_j(tᵢ)`, equal to `U_j(t0)` up to rounding.
    pub fn total_volume(&self) -> f64 {
        sum::sum(self.volumes.iter().copied())
    }
}

pub fn normalize_tape(holding: &Holding, tape: &SecurityTape) -> Result<NormalizedTape> {
    let lambda = lambda_factor(holding, tape)?;
    let n = tape.window().trade_count();
    if tape.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: tape.len(),
        });
    }
    Ok(NormalizedTape {
        security_id: holding.security_id.clone(),
        window: *tape.window(),
        lambda,
        prices: tape.prices().collect(),
        values: tape.values().map(|c| lambda * c).collect(),
        volumes: tape.volumes().map(|u| lambda * u).collect(),
    })
}

/// Trades of the portfolio as a single security.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioTape {
    window: AveragingWindow,
    values: Vec<f64>,
    volumes: Vec<f64>,
    prices: Vec<f64>,
    total_value: f64,
    total_shares: f64,
    mean_price: f64,
}

impl PortfolioTape {
    pub fn window(&self) -> &AveragingWindow {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Q(tᵢ) = Σ_j c_j(tᵢ)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `W(tᵢ) = Σ_j u_j(tᵢ)`.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// `s(tᵢ) = Q(tᵢ) / W(tᵢ)`.
    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// `Q_Σ(t) = Σᵢ Q(tᵢ)`.
    pub fn total_value(&self) -> f64 {
        self.total_value
    }

    /// `W_Σ(t) = Σᵢ W(tᵢ)`, equal to `W_Σ(t0)` up to rounding.
    pub fn total_shares(&self) -> f64 {
        self.total_shares
    }

    /// Portfolio VWAP `s(t) = Q_Σ(t) / W_Σ(t)`.
    pub fn mean_price(&self) -> f64 {
        self.mean_price
    }
}

/// Orders `normalized` to match the holdings of `spec`, checking that every
/// holding has exactly one tape and that all tapes share one window.
pub(crate) fn align<'a, T, F>(spec: &PortfolioSpec, items: &'a [T], id_of: F) -> Result<Vec<&'a T>>
where
    F: Fn(&T) -> &str,
{
    let mut slots: Vec<Option<&T>> = (0..spec.len()).map(|_| None).collect();
    for item in items {
        let id = id_of(item);
        let k = spec.position(id).ok_or_else(|| Error::UnknownSecurity(id.into()))?;
        if slots[k].replace(item).is_some() {
            return Err(Error::DuplicateSecurity(id.into()));
        }
    }
    slots
        .into_iter()
        .zip(spec.security_ids())
        .map(|(slot, id)| slot.ok_or_else(|| Error::MissingSecurity(id.into())))
        .collect()
}

pub fn build_portfolio_tape(spec: &PortfolioSpec, normalized: &[NormalizedTape]) -> Result<PortfolioTape> {
    let tapes = align(spec, normalized, NormalizedTape::security_id)?;
    let window = *tapes[0].window();
    for t in &tapes {
        if t.window != window {
            return Err(Error::WindowMismatch(t.security_id.clone()));
        }
        if t.volumes.len() != window.trade_count() || t.values.len() != window.trade_count() {
            return Err(Error::LengthMismatch {
                expected: window.trade_count(),
                found: t.volumes.len(),
            });
        }
    }

    let n = window.trade_count();
    let mut values = Vec::with_capacity(n);
    let mut volumes = Vec::with_capacity(n);
    let mut prices = Vec::with_capacity(n);
    for i in 0..n {
        let q = sum::sum(tapes.iter().map(|t| t.values[i]));
        let w = sum::sum(tapes.iter().map(|t| t.volumes[i]));
        if !(w > 0.0) {
            return Err(Error::ZeroPortfolioVolumeAtInstant(i + 1));
        }
        values.push(q);
        volumes.push(w);
        prices.push(q / w);
    }

    let total_value = values.iter().copied().sum::<NeumaierSum>().value();
    let total_shares = volumes.iter().copied().sum::<NeumaierSum>().value();
    Ok(PortfolioTape {
        window,
        values,
        volumes,
        prices,
        total_value,
        total_shares,
        mean_price: total_value / total_shares,
    })
}

/// Normalizes every tape against its holding and assembles the portfolio tape.
pub fn assemble(spec: &PortfolioSpec, tapes: &[SecurityTape]) -> Result<(Vec<NormalizedTape>, PortfolioTape)> {
    let aligned = align(spec, tapes, SecurityTape::security_id)?;
    let normalized = spec
        .holdings()
        .iter()
        .zip(aligned)
        .map(|(h, t)| normalize_tape(h, t))
        .collect::<Result<Vec<_>>>()?;
    let ptape = build_portfolio_tape(spec, &normalized)?;
    Ok((normalized, ptape))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rel_eq;
    use crate::tape::{vwap, Trade};
    use alloc::vec;

    fn window(n: usize) -> AveragingWindow {
        AveragingWindow::new(0, 2 * n as i64, n).unwrap()
    }

    fn tape(id: &str, p0: f64, prices: &[f64], volumes: &[f64]) -> SecurityTape {
        let trades = prices
            .iter()
            .zip(volumes)
            .enumerate()
            .map(|(k, (&p, &u))| Trade::new(k + 1, p, u))
            .collect();
        SecurityTape::new(id, window(prices.len()), trades, p0)
    }

    fn worked() -> (PortfolioSpec, Vec<SecurityTape>) {
        let spec = PortfolioSpec::new([("A", 10.0, 1.0), ("B", 10.0, 3.0)]).unwrap();
        let tapes = vec![
            tape("A", 1.0, &[1.0, 1.0], &[4.0, 6.0]),
            tape("B", 3.0, &[3.0, 3.0], &[2.0, 8.0]),
        ];
        (spec, tapes)
    }

    #[test]
    fn spec_totals_and_weights() {
        let spec = PortfolioSpec::new([("A", 10.0, 1.0), ("B", 10.0, 3.0)]).unwrap();
        assert_eq!(spec.total_value(), 40.0);
        assert_eq!(spec.total_shares(), 20.0);
        assert_eq!(spec.share_price(), 2.0);
        assert_eq!(spec.value_weights(), &[0.25, 0.75]);
        assert_eq!(spec.share_weights(), &[0.5, 0.5]);
        assert_eq!(spec.holding("B").unwrap().base_value(), 30.0);
    }

    #[test]
    fn single_holding_spec() {
        let spec = PortfolioSpec::new([("A", 7.0, 13.5)]).unwrap();
        assert_eq!(spec.value_weights(), &[1.0]);
        assert_eq!(spec.share_weights(), &[1.0]);
        assert_eq!(spec.share_price(), 13.5);
    }

    #[test]
    fn spec_errors() {
        assert_eq!(
            PortfolioSpec::new([("A", 10.0, 1.0), ("A", 5.0, 1.0)]),
            Err(Error::DuplicateSecurity("A".into()))
        );
        assert_eq!(
            PortfolioSpec::new([("A", 0.0, 1.0)]),
            Err(Error::NonpositiveShares("A".into()))
        );
        assert_eq!(
            PortfolioSpec::new([("A", 1.0, -1.0)]),
            Err(Error::NonpositivePrice("A".into()))
        );
        assert_eq!(
            PortfolioSpec::new(Vec::<(&str, f64, f64)>::new()),
            Err(Error::EmptyPortfolio)
        );
    }

    #[test]
    fn holdings_sorted_by_id() {
        let spec = PortfolioSpec::new([("B", 1.0, 2.0), ("A", 3.0, 1.0)]).unwrap();
        let ids: Vec<&str> = spec.security_ids().collect();
        assert_eq!(ids, vec!["A", "B"]);
        assert_eq!(spec.position("B"), Some(1));
        assert_eq!(spec.position("C"), None);
    }

    #[test]
    fn lambda_examples() {
        let spec = PortfolioSpec::new([("A", 10.0, 1.0)]).unwrap();
        let h = &spec.holdings()[0];
        assert_eq!(lambda_factor(h, &tape("A", 1.0, &[1.0, 1.0], &[4.0, 6.0])), Ok(1.0));
        assert_eq!(lambda_factor(h, &tape("A", 1.0, &[1.0, 1.0], &[15.0, 25.0])), Ok(0.25));
        assert_eq!(
            lambda_factor(h, &tape("A", 1.0, &[1.0, 1.0], &[0.0, 0.0])),
            Err(Error::ZeroTotalVolume("A".into()))
        );
        assert!(matches!(
            lambda_factor(h, &tape("B", 1.0, &[1.0, 1.0], &[1.0, 1.0])),
            Err(Error::SecurityMismatch { .. })
        ));
    }

    #[test]
    fn normalize_examples() {
        let spec = PortfolioSpec::new([("A", 10.0, 1.0)]).unwrap();
        let n = normalize_tape(&spec.holdings()[0], &tape("A", 1.0, &[10.0, 12.0], &[4.0, 6.0])).unwrap();
        assert_eq!(n.lambda(), 1.0);
        assert_eq!(n.volumes(), &[4.0, 6.0]);

        let spec = PortfolioSpec::new([("A", 5.0, 1.0)]).unwrap();
        let n = normalize_tape(&spec.holdings()[0], &tape("A", 1.0, &[10.0, 12.0], &[4.0, 6.0])).unwrap();
        assert_eq!(n.lambda(), 0.5);
        assert_eq!(n.volumes(), &[2.0, 3.0]);
        assert_eq!(n.total_volume(), 5.0);
        assert_eq!(n.values(), &[20.0, 36.0]);
        let recovered: Vec<f64> = n.values().iter().zip(n.volumes()).map(|(c, u)| c / u).collect();
        assert_eq!(recovered, vec![10.0, 12.0]);
        assert_eq!(n.prices(), &[10.0, 12.0]);
    }

    #[test]
    fn worked_portfolio_tape() {
        let (spec, tapes) = worked();
        let (_, p) = assemble(&spec, &tapes).unwrap();
        assert_eq!(p.values(), &[10.0, 30.0]);
        assert_eq!(p.volumes(), &[6.0, 14.0]);
        assert_eq!(p.prices(), &[10.0 / 6.0, 30.0 / 14.0]);
        assert_eq!(p.total_shares(), 20.0);
        assert_eq!(p.total_value(), 40.0);
        assert_eq!(p.mean_price(), 2.0);
    }

    #[test]
    fn single_security_tape_is_reproduced() {
        let spec = PortfolioSpec::new([("A", 10.0, 2.0)]).unwrap();
        let t = tape("A", 2.0, &[2.0, 2.5, 3.0], &[3.0, 3.0, 4.0]);
        let (_, p) = assemble(&spec, std::slice::from_ref(&t)).unwrap();
        let values: Vec<f64> = t.values().collect();
        let volumes: Vec<f64> = t.volumes().collect();
        assert_eq!(p.values(), values.as_slice());
        assert_eq!(p.volumes(), volumes.as_slice());
        for (s, q) in p.prices().iter().zip(t.prices()) {
            assert!(rel_eq(*s, q, 1e-15));
        }
    }

    #[test]
    fn assembly_errors() {
        let (spec, tapes) = worked();
        assert_eq!(
            assemble(&spec, &tapes[..1]).unwrap_err(),
            Error::MissingSecurity("B".into())
        );
        let mut extra = tapes.clone();
        extra.push(tape("C", 1.0, &[1.0, 1.0], &[1.0, 1.0]));
        assert_eq!(assemble(&spec, &extra).unwrap_err(), Error::UnknownSecurity("C".into()));

        let mismatched = vec![tapes[0].clone(), tape("B", 3.0, &[3.0, 3.0, 3.0], &[1.0, 1.0, 1.0])];
        assert_eq!(
            assemble(&spec, &mismatched).unwrap_err(),
            Error::WindowMismatch("B".into())
        );

        let holes = vec![
            tape("A", 1.0, &[1.0, 1.0], &[4.0, 0.0]),
            tape("B", 3.0, &[3.0, 3.0], &[2.0, 0.0]),
        ];
        assert_eq!(
            assemble(&spec, &holes).unwrap_err(),
            Error::ZeroPortfolioVolumeAtInstant(2)
        );
    }

    #[test]
    fn price_decomposition_over_vwaps() {
        let spec = PortfolioSpec::new([("A", 3.0, 5.0), ("B", 7.0, 2.0), ("C", 1.5, 40.0)]).unwrap();
        let tapes = vec![
            tape("A", 5.0, &[5.1, 4.9, 5.3], &[10.0, 1.0, 4.0]),
            tape("B", 2.0, &[2.2, 2.1, 1.9], &[0.0, 3.0, 9.0]),
            tape("C", 40.0, &[41.0, 39.5, 40.2], &[2.0, 2.0, 0.5]),
        ];
        let (norm, p) = assemble(&spec, &tapes).unwrap();
        let decomposed = sum::sum(
            tapes
                .iter()
                .zip(spec.share_weights())
                .map(|(t, x)| vwap(t).unwrap() * x),
        );
        assert!(rel_eq(p.mean_price(), decomposed, 1e-12));
        assert!(rel_eq(p.total_shares(), spec.total_shares(), 1e-12));
        for (t, h) in norm.iter().zip(spec.holdings()) {
            assert!(rel_eq(t.total_volume(), h.shares(), 1e-12));
        }
    }
}
