//! Gross returns of the portfolio and their decompositions over securities.
//!
//! Three per-instant portfolio return series are available:
//!
//! * [`portfolio_returns`]: `s(tᵢ)/s(t0)` read directly off the portfolio tape;
//! * [`random_return_decomposition`]: `Σ_j R_j(tᵢ) · x_j(tᵢ)/x_j(t0) · X_j(t0)`,
//!   which reproduces the direct series exactly;
//! * [`markowitz_random_returns`]: `Σ_j R_j(tᵢ) · X_j(t0)`, which matches the
//!   other two only when every trade volume is constant over the window.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::portfolio::{NormalizedTape, PortfolioSpec, PortfolioTape};
use crate::sum;
use crate::tape::{security_returns, SecurityTape};

/// Gross returns over the window, with the volumes that weight their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    base_price: f64,
    random: Vec<f64>,
    mean: f64,
    weights: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(base_price: f64, random: Vec<f64>, mean: f64, weights: Vec<f64>) -> Self {
        Self {
            base_price,
            random,
            mean,
            weights,
        }
    }

    /// Price at `t0` the returns are measured against.
    pub fn base_price(&self) -> f64 {
        self.base_price
    }

    /// `R(tᵢ, t0)` for `i = 1..N`.
    pub fn random(&self) -> &[f64] {
        &self.random
    }

    /// `R(t, t0)`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.random.len()
    }

    pub fn is_empty(&self) -> bool {
        self.random.is_empty()
    }

    /// `Σᵢ wᵢ R(tᵢ) / Σᵢ wᵢ`, recomputed from the series.
    pub fn weighted_mean(&self) -> f64 {
        weighted_mean(&self.random, &self.weights)
    }

    /// Net returns `R - 1`.
    pub fn net(&self) -> Vec<f64> {
        self.random.iter().map(|r| r - 1.0).collect()
    }

    pub fn net_mean(&self) -> f64 {
        self.mean - 1.0
    }
}

/// Per-security return series keyed by security id.
pub type SecurityReturns = BTreeMap<String, ReturnSeries>;

/// Runs [`security_returns`] over every tape.
pub fn security_return_map(tapes: &[SecurityTape]) -> Result<SecurityReturns> {
    tapes
        .iter()
        .map(|t| Ok((t.security_id().into(), security_returns(t)?)))
        .collect()
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    sum::dot(values, weights) / sum::sum(weights.iter().copied())
}

fn lookup<'a>(returns: &'a SecurityReturns, id: &str) -> Result<&'a ReturnSeries> {
    returns.get(id).ok_or_else(|| Error::MissingSecurity(id.into()))
}

pub(crate) fn aligned<'a>(spec: &PortfolioSpec, returns: &'a SecurityReturns) -> Result<Vec<&'a ReturnSeries>> {
    let series = spec
        .security_ids()
        .map(|id| lookup(returns, id))
        .collect::<Result<Vec<_>>>()?;
    let n = series[0].len();
    if let Some(bad) = series.iter().find(|r| r.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    Ok(series)
}

/// `R(tᵢ, t0) = s(tᵢ)/s(t0)` and `R(t, t0) = s(t)/s(t0)`, weighted by `W(tᵢ)`.
pub fn portfolio_returns(spec: &PortfolioSpec, ptape: &PortfolioTape) -> ReturnSeries {
    let s0 = spec.share_price();
    ReturnSeries {
        base_price: s0,
        random: ptape.prices().iter().map(|s| s / s0).collect(),
        mean: ptape.mean_price() / s0,
        weights: ptape.volumes().to_vec(),
    }
}

/// `Σ_j R_j(t, t0) · X_j(t0)`.
pub fn mean_return_decomposition(spec: &PortfolioSpec, returns: &SecurityReturns) -> Result<f64> {
    let terms = spec
        .holdings()
        .iter()
        .zip(spec.value_weights())
        .map(|(h, x)| Ok(lookup(returns, h.security_id())?.mean() * x))
        .collect::<Result<Vec<_>>>()?;
    Ok(sum::sum(terms))
}

/// Relative volumes `x_j(tᵢ) = u_j(tᵢ) / W(tᵢ)`; at each instant they sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeVolumeSeries {
    columns: BTreeMap<String, Vec<f64>>,
    portfolio_volumes: Vec<f64>,
}

impl RelativeVolumeSeries {
    pub fn get(&self, security_id: &str) -> Option<&[f64]> {
        self.columns.get(security_id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.columns.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// `W(tᵢ)`.
    pub fn portfolio_volumes(&self) -> &[f64] {
        &self.portfolio_volumes
    }

    /// `Σ_j x_j(tᵢ)` at instant `i` (0-based).
    pub fn row_sum(&self, i: usize) -> f64 {
        sum::sum(self.columns.values().map(|c| c[i]))
    }
}

pub fn relative_volumes(ptape: &PortfolioTape, normalized: &[NormalizedTape]) -> Result<RelativeVolumeSeries> {
    let volumes = ptape.volumes();
    if let Some(i) = volumes.iter().position(|w| !(*w > 0.0)) {
        return Err(Error::ZeroPortfolioVolumeAtInstant(i + 1));
    }
    let mut columns = BTreeMap::new();
    for t in normalized {
        if t.volumes().len() != volumes.len() {
            return Err(Error::LengthMismatch {
                expected: volumes.len(),
                found: t.volumes().len(),
            });
        }
        let col = t.volumes().iter().zip(volumes).map(|(u, w)| u / w).collect();
        if columns.insert(String::from(t.security_id()), col).is_some() {
            return Err(Error::DuplicateSecurity(t.security_id().into()));
        }
    }
    Ok(RelativeVolumeSeries {
        columns,
        portfolio_volumes: volumes.to_vec(),
    })
}

/// `R(tᵢ, t0) = Σ_j R_j(tᵢ, t0) · (x_j(tᵢ) / x_j(t0)) · X_j(t0)`.
///
/// `x_j(t0) > 0` holds for every holding, so the ratio needs no guard.
pub fn random_return_decomposition(
    spec: &PortfolioSpec,
    returns: &SecurityReturns,
    relvols: &RelativeVolumeSeries,
) -> Result<ReturnSeries> {
    let series = aligned(spec, returns)?;
    let n = series[0].len();
    let mut factors = Vec::with_capacity(spec.len());
    for ((h, big_x), small_x0) in spec
        .holdings()
        .iter()
        .zip(spec.value_weights())
        .zip(spec.share_weights())
    {
        let x = relvols
            .get(h.security_id())
            .ok_or_else(|| Error::MissingSecurity(h.security_id().into()))?;
        if x.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: x.len(),
            });
        }
        factors.push((x, big_x / small_x0));
    }

    let random: Vec<f64> = (0..n)
        .map(|i| {
            sum::sum(
                series
                    .iter()
                    .zip(&factors)
                    .map(|(r, (x, scale))| r.random()[i] * x[i] * scale),
            )
        })
        .collect();
    let weights = relvols.portfolio_volumes().to_vec();
    let mean = weighted_mean(&random, &weights);
    Ok(ReturnSeries {
        base_price: spec.share_price(),
        random,
        mean,
        weights,
    })
}

/// Constant-volume form `R_M(tᵢ) = Σ_j R_j(tᵢ, t0) · X_j(t0)`.
///
/// The weights are the portfolio volumes `W(tᵢ) = Σ_j U_j(t0) U_j(tᵢ) / U_Σj`
/// implied by the security series. Under varying volumes the weighted mean
/// of this series generally differs from `R(t, t0)`.
pub fn markowitz_random_returns(spec: &PortfolioSpec, returns: &SecurityReturns) -> Result<ReturnSeries> {
    let series = aligned(spec, returns)?;
    let n = series[0].len();
    let random: Vec<f64> = (0..n)
        .map(|i| sum::sum(series.iter().zip(spec.value_weights()).map(|(r, x)| r.random()[i] * x)))
        .collect();

    let scales: Vec<f64> = series
        .iter()
        .zip(spec.holdings())
        .map(|(r, h)| h.shares() / sum::sum(r.weights().iter().copied()))
        .collect();
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            sum::sum(
                series
                    .iter()
                    .zip(&scales)
                    .map(|(r, lambda)| r.weights().get(i).copied().unwrap_or(0.0) * lambda),
            )
        })
        .collect();
    let mean = weighted_mean(&random, &weights);
    Ok(ReturnSeries {
        base_price: spec.share_price(),
        random,
        mean,
        weights,
    })
}
