//! Markowitz, market-based and Taylor-approximate portfolio variances.
//!
//! All averages over the window use the population divisor `1/N`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::portfolio::{assemble, PortfolioSpec, PortfolioTape};
use crate::returns::{aligned, portfolio_returns, security_return_map, ReturnSeries, SecurityReturns};
use crate::sum::{self, NeumaierSum};
use crate::tape::SecurityTape;

/// Largest negative rounding artifact silently clamped to zero.
pub const NEGATIVE_SLACK: f64 = 1e-12;

/// Clamps `[-1e-12, 0)` to zero and rejects anything lower.
pub fn clamp_variance(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -NEGATIVE_SLACK {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance(v))
    }
}

/// Value and volume statistics of the portfolio tape.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TradeMoments {
    /// `Q(t;1)`
    pub q_mean: f64,
    /// `Q(t;2)`
    pub q_mean_sq: f64,
    /// `W(t;1)`
    pub w_mean: f64,
    /// `W(t;2)`
    pub w_mean_sq: f64,
    /// `Ψ_Q`
    pub psi_q: f64,
    /// `Ψ_W`
    pub psi_w: f64,
    pub cov_qw: f64,
    /// `ψ² = Ψ_Q / Q(t;1)²`
    pub psi_sq: f64,
    /// `χ² = Ψ_W / W(t;1)²`
    pub chi_sq: f64,
    /// `φ = cov_QW / (Q(t;1) W(t;1))`
    pub phi: f64,
}

impl TradeMoments {
    pub fn psi(&self) -> f64 {
        libm::sqrt(self.psi_sq)
    }

    pub fn chi(&self) -> f64 {
        libm::sqrt(self.chi_sq)
    }
}

// Centered second moment; the correction term absorbs the error in `mean`.
fn central(xs: &[f64], mx: f64, ys: &[f64], my: f64) -> f64 {
    let n = xs.len() as f64;
    let cross = sum::sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let dx = sum::sum(xs.iter().map(|x| x - mx));
    let dy = sum::sum(ys.iter().map(|y| y - my));
    (cross - dx * dy / n) / n
}

/// Central moments are evaluated as centered sums, which equal
/// `Q(t;2) - Q(t;1)²` algebraically but do not cancel catastrophically.
pub fn trade_moments(ptape: &PortfolioTape) -> Result<TradeMoments> {
    let q = ptape.values();
    let w = ptape.volumes();
    if q.len() < 2 {
        return Err(Error::DegenerateWindow(q.len()));
    }
    let q_mean = sum::mean(q);
    let w_mean = sum::mean(w);
    let q_mean_sq = sum::sum(q.iter().map(|x| x * x)) / q.len() as f64;
    let w_mean_sq = sum::sum(w.iter().map(|x| x * x)) / w.len() as f64;
    let psi_q = central(q, q_mean, q, q_mean).max(0.0);
    let psi_w = central(w, w_mean, w, w_mean).max(0.0);
    let cov_qw = central(q, q_mean, w, w_mean);
    Ok(TradeMoments {
        q_mean,
        q_mean_sq,
        w_mean,
        w_mean_sq,
        psi_q,
        psi_w,
        cov_qw,
        psi_sq: psi_q / (q_mean * q_mean),
        chi_sq: psi_w / (w_mean * w_mean),
        phi: cov_qw / (q_mean * w_mean),
    })
}

/// Dense symmetric `J × J` matrix, row-major, in holding order.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: alloc::vec![0.0; dim * dim],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[j * self.dim + k]
    }

    fn set_pair(&mut self, j: usize, k: usize, v: f64) {
        self.data[j * self.dim + k] = v;
        self.data[k * self.dim + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|j| (0..j).all(|k| self.get(j, k) == self.get(k, j)))
    }

    /// `Σ_jk θ_jk v_j v_k`.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        let mut acc = NeumaierSum::new();
        for j in 0..self.dim {
            for k in 0..self.dim {
                acc += self.get(j, k) * v[j] * v[k];
            }
        }
        Ok(acc.value())
    }
}

fn check_series(series: &[&ReturnSeries]) -> Result<usize> {
    let first = series
        .first()
        .ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?;
    let n = first.len();
    if let Some(bad) = series.iter().find(|s| s.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    if n < 2 {
        return Err(Error::DegenerateWindow(n));
    }
    Ok(n)
}

/// `θ_jk = (1/N) Σᵢ (R_j(tᵢ) - R̄_j)(R_k(tᵢ) - R̄_k)` with equal-weight means `R̄_j`.
pub fn markowitz_covariance(series: &[&ReturnSeries]) -> Result<CovarianceMatrix> {
    check_series(series)?;
    let means: Vec<f64> = series.iter().map(|s| sum::mean(s.random())).collect();
    let mut m = CovarianceMatrix::zeros(series.len());
    for j in 0..series.len() {
        for k in 0..=j {
            let v = central(series[j].random(), means[j], series[k].random(), means[k]);
            m.set_pair(j, k, v);
        }
    }
    Ok(m)
}

/// Covariance with instant weights `wᵢ` (typically the portfolio volumes
/// `W(tᵢ)`) used for both the means and the cross products.
pub fn markowitz_covariance_weighted(series: &[&ReturnSeries], weights: &[f64]) -> Result<CovarianceMatrix> {
    let n = check_series(series)?;
    if weights.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: weights.len(),
        });
    }
    let total = sum::sum(weights.iter().copied());
    let means: Vec<f64> = series.iter().map(|s| sum::dot(s.random(), weights) / total).collect();
    let mut m = CovarianceMatrix::zeros(series.len());
    for j in 0..series.len() {
        for k in 0..=j {
            let (rj, rk) = (series[j].random(), series[k].random());
            let v = sum::sum((0..n).map(|i| weights[i] * (rj[i] - means[j]) * (rk[i] - means[k]))) / total;
            m.set_pair(j, k, v);
        }
    }
    Ok(m)
}

/// `Θ_M = Σ_jk θ_jk X_j(t0) X_k(t0)`.
pub fn markowitz_variance(spec: &PortfolioSpec, theta: &CovarianceMatrix) -> Result<f64> {
    clamp_variance(theta.quadratic_form(spec.value_weights())?)
}

/// `Θ = (ψ² - 2φ + χ²) / (1 + χ²) · R²`.
pub fn market_based_variance(moments: &TradeMoments, mean_return: f64) -> Result<f64> {
    let numerator = moments.psi_sq - 2.0 * moments.phi + moments.chi_sq;
    clamp_variance(numerator / (1.0 + moments.chi_sq) * mean_return * mean_return)
}

/// Second-order expansion of the market-based variance around `χ = 0`:
/// `Θ_M - 2a √Θ_M R χ + (R² - Θ_M) χ²`.
///
/// The coefficient `a` has no default; callers must supply it.
pub fn taylor_variance(theta_m: f64, mean_return: f64, chi: f64, a: f64) -> f64 {
    theta_m - 2.0 * a * libm::sqrt(theta_m) * mean_return * chi + (mean_return * mean_return - theta_m) * chi * chi
}

/// `(Θ_M - Θ) / Θ`; zero when both vanish, `None` when only `Θ` does.
pub fn divergence(theta_m: f64, theta: f64) -> Option<f64> {
    if theta > 0.0 {
        Some((theta_m - theta) / theta)
    } else if theta_m == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// How the expectation over trade instants in `θ_jk` is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CovarianceWeighting {
    /// `1/N` per instant.
    #[default]
    Equal,
    /// Weighted by the portfolio volumes `W(tᵢ)`.
    Volume,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReportOptions {
    /// Coefficient `a` of the Taylor expansion; the Taylor variance is
    /// omitted when absent.
    pub taylor_a: Option<f64>,
    pub weighting: CovarianceWeighting,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceReport {
    /// Row/column order of `theta_jk`.
    pub security_ids: Vec<String>,
    pub theta_m: f64,
    pub theta: f64,
    pub theta_t: Option<f64>,
    pub taylor_a: Option<f64>,
    pub mean_return: f64,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub moments: TradeMoments,
    pub theta_jk: Vec<Vec<f64>>,
    pub divergence: Option<f64>,
    pub covariance_weighting: CovarianceWeighting,
}

pub fn full_report(
    spec: &PortfolioSpec,
    ptape: &PortfolioTape,
    returns: &SecurityReturns,
    options: &ReportOptions,
) -> Result<VarianceReport> {
    let moments = trade_moments(ptape)?;
    let series = aligned(spec, returns)?;
    let theta_jk = match options.weighting {
        CovarianceWeighting::Equal => markowitz_covariance(&series)?,
        CovarianceWeighting::Volume => markowitz_covariance_weighted(&series, ptape.volumes())?,
    };
    let theta_m = markowitz_variance(spec, &theta_jk)?;
    let mean_return = portfolio_returns(spec, ptape).mean();
    let theta = market_based_variance(&moments, mean_return)?;
    let theta_t = options
        .taylor_a
        .map(|a| taylor_variance(theta_m, mean_return, moments.chi(), a));
    Ok(VarianceReport {
        security_ids: spec.security_ids().map(String::from).collect(),
        theta_m,
        theta,
        theta_t,
        taylor_a: options.taylor_a,
        mean_return,
        moments,
        theta_jk: theta_jk.rows(),
        divergence: divergence(theta_m, theta),
        covariance_weighting: options.weighting,
    })
}

/// Whole pipeline from validated tapes to a report.
pub fn analyze(spec: &PortfolioSpec, tapes: &[SecurityTape], options: &ReportOptions) -> Result<VarianceReport> {
    let (_, ptape) = assemble(spec, tapes)?;
    let returns = security_return_map(tapes)?;
    full_report(spec, &ptape, &returns, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rel_eq;
    use crate::tape::{AveragingWindow, Trade};
    use alloc::vec;

    fn tape(id: &str, p0: f64, prices: &[f64], volumes: &[f64]) -> SecurityTape {
        let n = prices.len();
        let trades = prices
            .iter()
            .zip(volumes)
            .enumerate()
            .map(|(k, (&p, &u))| Trade::new(k + 1, p, u))
            .collect();
        SecurityTape::new(id, AveragingWindow::new(0, 2 * n as i64, n).unwrap(), trades, p0)
    }

    fn series(random: &[f64]) -> ReturnSeries {
        ReturnSeries::new(1.0, random.to_vec(), 0.0, vec![1.0; random.len()])
    }

    fn worked() -> (PortfolioSpec, Vec<SecurityTape>) {
        (
            PortfolioSpec::new([("A", 10.0, 1.0), ("B", 10.0, 3.0)]).unwrap(),
            vec![
                tape("A", 1.0, &[1.0, 1.0], &[4.0, 6.0]),
                tape("B", 3.0, &[3.0, 3.0], &[2.0, 8.0]),
            ],
        )
    }

    // Population variance by the textbook two-pass formula.
    fn brute_variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n
    }

    #[test]
    fn worked_moments() {
        let (spec, tapes) = worked();
        let (_, p) = assemble(&spec, &tapes).unwrap();
        let m = trade_moments(&p).unwrap();
        // Q = {10, 30}, W = {6, 14}
        assert_eq!(m.q_mean, 20.0);
        assert_eq!(m.q_mean_sq, 500.0);
        assert_eq!(m.psi_q, 100.0);
        assert_eq!(m.psi_sq, 0.25);
        assert_eq!(m.w_mean, 10.0);
        assert_eq!(m.w_mean_sq, 116.0);
        assert_eq!(m.psi_w, 16.0);
        assert!(rel_eq(m.chi_sq, 0.16, 1e-15));
        assert_eq!(m.cov_qw, 40.0);
        assert!(rel_eq(m.phi, 0.2, 1e-15));
    }

    #[test]
    fn constant_and_proportional_volume_moments() {
        let spec = PortfolioSpec::new([("A", 4.0, 2.0)]).unwrap();
        let (_, p) = assemble(&spec, &[tape("A", 2.0, &[2.0, 3.0, 2.5], &[5.0, 5.0, 5.0])]).unwrap();
        let m = trade_moments(&p).unwrap();
        assert_eq!(m.chi_sq, 0.0);
        assert_eq!(m.phi, 0.0);

        // constant price: Q = 2.5 W
        let (_, p) = assemble(&spec, &[tape("A", 2.0, &[2.5; 4], &[1.0, 7.0, 3.0, 4.0])]).unwrap();
        let m = trade_moments(&p).unwrap();
        assert!(rel_eq(m.psi_sq, m.chi_sq, 1e-12));
        assert!(rel_eq(m.phi, m.psi() * m.chi(), 1e-12));
        assert!(market_based_variance(&m, 1.25).unwrap() < 1e-15);
    }

    #[test]
    fn moments_need_two_instants() {
        let spec = PortfolioSpec::new([("A", 4.0, 2.0)]).unwrap();
        let w = AveragingWindow::new(0, 4, 2).unwrap();
        let t = SecurityTape::new("A", w, vec![Trade::new(1, 1.0, 1.0), Trade::new(2, 1.0, 1.0)], 1.0);
        let (_, p) = assemble(&spec, &[t]).unwrap();
        assert!(trade_moments(&p).is_ok());
        assert_eq!(
            markowitz_covariance(&[&series(&[1.0])]),
            Err(Error::DegenerateWindow(1))
        );
    }

    #[test]
    fn covariance_examples() {
        let c = markowitz_covariance(&[&series(&[1.0, 1.0, 1.0]), &series(&[2.0, 2.0, 2.0])]).unwrap();
        assert_eq!(c.rows(), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);

        let c = markowitz_covariance(&[&series(&[1.0, 1.2])]).unwrap();
        assert!(rel_eq(c.get(0, 0), 0.01, 1e-12));

        let c = markowitz_covariance(&[&series(&[1.0, 1.2]), &series(&[1.2, 1.0])]).unwrap();
        assert!(rel_eq(c.get(0, 1), -0.01, 1e-12));
        assert!(c.is_symmetric());

        assert_eq!(
            markowitz_covariance(&[&series(&[1.0, 1.2]), &series(&[1.0, 1.2, 1.1])]),
            Err(Error::LengthMismatch { expected: 2, found: 3 })
        );
    }

    #[test]
    fn markowitz_variance_examples() {
        let spec2 = PortfolioSpec::new([("A", 10.0, 1.0), ("B", 10.0, 3.0)]).unwrap();
        assert_eq!(markowitz_variance(&spec2, &CovarianceMatrix::zeros(2)), Ok(0.0));

        let spec1 = PortfolioSpec::new([("A", 3.0, 1.0)]).unwrap();
        let theta = CovarianceMatrix::from_rows(&[vec![0.01]]).unwrap();
        assert_eq!(markowitz_variance(&spec1, &theta), Ok(0.01));

        // 0.01 * (0.0625 + 0.5625 - 2 * 0.1875)
        let theta = CovarianceMatrix::from_rows(&[vec![0.01, -0.01], vec![-0.01, 0.01]]).unwrap();
        assert!(rel_eq(markowitz_variance(&spec2, &theta).unwrap(), 0.0025, 1e-12));

        assert_eq!(
            markowitz_variance(&spec2, &CovarianceMatrix::zeros(3)),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        );
    }

    #[test]
    fn market_based_examples() {
        let m = TradeMoments {
            q_mean: 20.0,
            q_mean_sq: 500.0,
            w_mean: 10.0,
            w_mean_sq: 116.0,
            psi_q: 100.0,
            psi_w: 16.0,
            cov_qw: 40.0,
            psi_sq: 0.25,
            chi_sq: 0.16,
            phi: 0.2,
        };
        // (0.25 - 0.4 + 0.16) / 1.16
        let theta = market_based_variance(&m, 1.0).unwrap();
        assert!((theta - 0.01 / 1.16).abs() < 1e-15);
        assert!((theta - 0.0086207).abs() < 1e-7);
    }

    #[test]
    fn constant_volume_market_variance_is_sample_variance() {
        let spec = PortfolioSpec::new([("A", 4.0, 2.0), ("B", 1.0, 10.0)]).unwrap();
        let tapes = [
            tape("A", 2.0, &[2.0, 2.2, 1.9, 2.4, 2.1], &[3.0; 5]),
            tape("B", 10.0, &[10.5, 9.0, 9.5, 11.0, 10.0], &[7.0; 5]),
        ];
        let (_, p) = assemble(&spec, &tapes).unwrap();
        let m = trade_moments(&p).unwrap();
        let r = portfolio_returns(&spec, &p);
        let theta = market_based_variance(&m, r.mean()).unwrap();
        assert!(rel_eq(theta, m.psi_sq * r.mean() * r.mean(), 1e-15));
        assert!(rel_eq(theta, brute_variance(r.random()), 1e-12));
    }

    #[test]
    fn negative_variance_policy() {
        assert_eq!(clamp_variance(-5e-13), Ok(0.0));
        assert_eq!(clamp_variance(0.5), Ok(0.5));
        assert_eq!(clamp_variance(-1e-9), Err(Error::NegativeVariance(-1e-9)));
    }

    #[test]
    fn taylor_examples() {
        assert_eq!(taylor_variance(0.37, 1.2, 0.0, -3.0), 0.37);
        assert!(rel_eq(taylor_variance(0.0, 1.1, 0.3, 7.0), 1.1 * 1.1 * 0.09, 1e-15));
        // 0.01 - 2*1*sqrt(0.01)*1*0.1 + (1 - 0.01)*0.1^2 = 0.01 - 0.02 + 0.0099
        assert!((taylor_variance(0.01, 1.0, 0.1, 1.0) - (-0.0001)).abs() < 1e-15);
    }

    #[test]
    fn worked_report() {
        let (spec, tapes) = worked();
        let report = analyze(&spec, &tapes, &ReportOptions::default()).unwrap();
        assert_eq!(report.theta_m, 0.0);
        assert!((report.theta - 0.01 / 1.16).abs() < 1e-12);
        assert_eq!(report.divergence, Some(-1.0));
        assert_eq!(report.theta_t, None);
        assert_eq!(report.security_ids, vec!["A", "B"]);

        let with_a = analyze(
            &spec,
            &tapes,
            &ReportOptions {
                taylor_a: Some(0.5),
                ..Default::default()
            },
        )
        .unwrap();
        // Θ_M = 0 leaves R²χ² = 0.16
        assert!(rel_eq(with_a.theta_t.unwrap(), 0.16, 1e-12));
    }

    #[test]
    fn constant_volume_report_has_no_divergence() {
        let spec = PortfolioSpec::new([("A", 4.0, 2.0), ("B", 1.0, 10.0)]).unwrap();
        let tapes = [
            tape("A", 2.0, &[2.0, 2.2, 1.9, 2.4], &[3.0; 4]),
            tape("B", 10.0, &[10.5, 9.0, 9.5, 11.0], &[7.0; 4]),
        ];
        let report = analyze(&spec, &tapes, &ReportOptions::default()).unwrap();
        assert!(report.divergence.unwrap().abs() < 1e-9);
    }

    #[test]
    fn single_security_constant_volume_report() {
        let spec = PortfolioSpec::new([("A", 2.0, 5.0)]).unwrap();
        let prices = [5.0, 5.5, 4.5, 6.0, 5.2, 4.8];
        let report = analyze(&spec, &[tape("A", 5.0, &prices, &[2.0; 6])], &ReportOptions::default()).unwrap();
        let returns: Vec<f64> = prices.iter().map(|p| p / 5.0).collect();
        let oracle = brute_variance(&returns);
        assert!(rel_eq(report.theta, oracle, 1e-12));
        assert!(rel_eq(report.theta_m, oracle, 1e-12));
    }

    #[test]
    fn equal_weight_covariance_is_the_default() {
        let spec = PortfolioSpec::new([("A", 4.0, 10.0)]).unwrap();
        let tapes = [tape("A", 10.0, &[10.0, 12.0], &[1.0, 3.0])];
        let equal = analyze(&spec, &tapes, &ReportOptions::default()).unwrap();
        // returns {1.0, 1.2}: equal weights give 0.01
        assert!(rel_eq(equal.theta_m, 0.01, 1e-12));
        let volume = analyze(
            &spec,
            &tapes,
            &ReportOptions {
                weighting: CovarianceWeighting::Volume,
                ..Default::default()
            },
        )
        .unwrap();
        // weights {1/4, 3/4}: mean 1.15, variance 0.0075
        assert!(rel_eq(volume.theta_m, 0.0075, 1e-12));
    }

    #[test]
    fn divergence_edge_cases() {
        assert_eq!(divergence(0.0, 0.0), Some(0.0));
        assert_eq!(divergence(1.0, 0.0), None);
        assert_eq!(divergence(3.0, 2.0), Some(0.5));
    }
}
