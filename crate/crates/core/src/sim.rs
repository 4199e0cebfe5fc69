//! Seeded synthetic trade tapes and Markowitz-vs-market divergence sweeps.
//!
//! # Generator
//!
//! Random numbers come from ChaCha8 (`rand_chacha::ChaCha8Rng`), seeded with
//! `seed_from_u64(seed)`; replication `r` uses stream `r` of that key via
//! `set_stream(r)`. Uniforms take the top 53 bits of `next_u64`. Normal
//! deviates use the Box–Muller transform with `libm`'s portable `log`, `sqrt`,
//! `sin`, `cos` and `exp`, so output is bit-identical across platforms.
//!
//! # Model
//!
//! For every instant `i = 1..N` and security `j` (in holding order) one pair
//! of standard normals `(ε, η)` is drawn:
//!
//! * price: `p(tᵢ) = p(t0) · exp(σ_p Σ_{k≤i} ε_k)`, a driftless multiplicative
//!   random walk;
//! * volume: `U(tᵢ) = exp(m + s z)` with `z = ρ ε + √(1-ρ²) η`,
//!   `s² = ln(1 + cv²)` and `m = ln μ_U - s²/2`, so the volumes are
//!   log-normal with mean `μ_U` and coefficient of variation `cv`. With
//!   `cv = 0` the volume is exactly `μ_U`;
//! * value: `C(tᵢ) = p(tᵢ) · U(tᵢ)`.
//!
//! If every volume at an instant underflows to zero, the volumes of that
//! instant are redrawn from fresh `η` so that `W(tᵢ) > 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::portfolio::PortfolioSpec;
use crate::sum::{self, NeumaierSum};
use crate::tape::{AveragingWindow, SecurityTape, Trade};
use crate::variance::{analyze, ReportOptions};

const SECOND: i64 = 1_000_000_000;
const MAX_REDRAWS: usize = 64;

/// Parameters of one simulated security.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SecuritySim {
    /// Price at `t0`.
    pub base_price: f64,
    /// Per-trade log-price volatility.
    pub sigma_p: f64,
    /// Mean trade volume.
    pub mean_volume: f64,
    /// Target coefficient of variation of trade volumes.
    pub cv_u: f64,
    /// Correlation of log-price and log-volume innovations.
    pub rho: f64,
    /// Shares held since `t0`.
    pub shares: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    pub seed: u64,
    /// Trades per security in the window (`N`).
    pub trades: usize,
    pub securities: Vec<SecuritySim>,
}

fn invalid(msg: String) -> Error {
    Error::InvalidConfig(msg)
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trades < 2 {
            return Err(invalid(format!("trades must be at least 2, got {}", self.trades)));
        }
        if self.securities.is_empty() {
            return Err(invalid("at least one security is required".into()));
        }
        for (j, s) in self.securities.iter().enumerate() {
            let checks = [
                (
                    s.base_price.is_finite() && s.base_price > 0.0,
                    "base_price must be positive",
                ),
                (
                    s.sigma_p.is_finite() && s.sigma_p >= 0.0,
                    "sigma_p must be non-negative",
                ),
                (
                    s.mean_volume.is_finite() && s.mean_volume > 0.0,
                    "mean_volume must be positive",
                ),
                (s.cv_u.is_finite() && s.cv_u >= 0.0, "cv_u must be non-negative"),
                ((-1.0..=1.0).contains(&s.rho), "rho must lie in [-1, 1]"),
                (s.shares.is_finite() && s.shares > 0.0, "shares must be positive"),
            ];
            if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
                return Err(invalid(format!("security {}: {msg}", j + 1)));
            }
        }
        Ok(())
    }

    /// Window used for generated tapes: starts at 0, one trade per second.
    pub fn window(&self) -> Result<AveragingWindow> {
        let width = i64::try_from(self.trades)
            .ok()
            .and_then(|n| n.checked_mul(SECOND))
            .ok_or_else(|| invalid("trades too large".into()))?;
        AveragingWindow::from_start(0, width, self.trades)
    }

    /// Copy with `cv_u` and `rho` overridden for every security.
    pub fn with_dispersion(&self, cv_u: f64, rho: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.securities {
            s.cv_u = cv_u;
            s.rho = rho;
        }
        out
    }
}

/// Security ids are `S001`, `S002`, ... so that lexical and numeric order agree.
pub fn security_id(j: usize) -> String {
    format!("S{:03}", j + 1)
}

struct Normals {
    rng: ChaCha8Rng,
}

impl Normals {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let angle = 2.0 * PI * u2;
        (r * libm::cos(angle), r * libm::sin(angle))
    }
}

struct VolumeLaw {
    mean: f64,
    mu: f64,
    s: f64,
    rho: f64,
    rho_c: f64,
}

impl VolumeLaw {
    fn new(sec: &SecuritySim) -> Self {
        let s2 = libm::log1p(sec.cv_u * sec.cv_u);
        Self {
            mean: sec.mean_volume,
            mu: libm::log(sec.mean_volume) - 0.5 * s2,
            s: libm::sqrt(s2),
            rho: sec.rho,
            rho_c: libm::sqrt(1.0 - sec.rho * sec.rho),
        }
    }

    fn draw(&self, eps: f64, eta: f64) -> f64 {
        if self.s == 0.0 {
            return self.mean;
        }
        libm::exp(self.mu + self.s * (self.rho * eps + self.rho_c * eta))
    }
}

/// One replication; replication `r` draws from ChaCha8 stream `r`.
pub fn generate_replication(config: &SimConfig, replication: u64) -> Result<(PortfolioSpec, Vec<SecurityTape>)> {
    config.validate()?;
    let window = config.window()?;
    let n = config.trades;
    let j_count = config.securities.len();
    let laws: Vec<VolumeLaw> = config.securities.iter().map(VolumeLaw::new).collect();
    let mut normals = Normals::new(config.seed, replication);

    let mut log_moves = alloc::vec![0.0_f64; j_count];
    let mut trades: Vec<Vec<Trade>> = (0..j_count).map(|_| Vec::with_capacity(n)).collect();
    let mut eps = alloc::vec![0.0_f64; j_count];
    let mut volumes = alloc::vec![0.0_f64; j_count];

    for i in 1..=n {
        for (j, sec) in config.securities.iter().enumerate() {
            let (e, h) = normals.pair();
            eps[j] = e;
            log_moves[j] += sec.sigma_p * e;
            volumes[j] = laws[j].draw(e, h);
        }
        let mut redraws = 0;
        while volumes.iter().all(|u| *u == 0.0) {
            redraws += 1;
            if redraws > MAX_REDRAWS {
                return Err(invalid(format!("volumes underflow to zero at instant {i}")));
            }
            for j in 0..j_count {
                let (_, h) = normals.pair();
                volumes[j] = laws[j].draw(eps[j], h);
            }
        }
        for (j, sec) in config.securities.iter().enumerate() {
            let price = sec.base_price * libm::exp(log_moves[j]);
            trades[j].push(Trade::new(i, price, volumes[j]));
        }
    }

    let spec = PortfolioSpec::new(
        config
            .securities
            .iter()
            .enumerate()
            .map(|(j, s)| (security_id(j), s.shares, s.base_price)),
    )?;
    let tapes = trades
        .into_iter()
        .zip(&config.securities)
        .enumerate()
        .map(|(j, (t, s))| SecurityTape::new(security_id(j), window, t, s.base_price))
        .collect();
    Ok((spec, tapes))
}

/// Replication 0 of `config`.
pub fn generate_tape(config: &SimConfig) -> Result<(PortfolioSpec, Vec<SecurityTape>)> {
    generate_replication(config, 0)
}

/// Grid of volume dispersions and couplings applied to a base configuration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepConfig {
    pub base: SimConfig,
    pub cv_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub replications: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub taylor_a: Option<f64>,
}

/// Averages over the replications of one `(cv_u, rho)` cell.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub cv_u: f64,
    pub rho: f64,
    pub theta_m_mean: f64,
    pub theta_mean: f64,
    /// Mean of `(Θ_M - Θ)/Θ` over replications where it is defined; NaN if
    /// it is defined for none.
    pub divergence_mean: f64,
    /// Sample standard deviation (`1/(M-1)`) of the divergence; 0 for one
    /// replication.
    pub divergence_stddev: f64,
    pub replications: usize,
    pub theta_t_mean: Option<f64>,
}

impl Default for SweepConfig {
    /// Short windows (`N = 4`) on a two-security portfolio: a low-priced
    /// security (10, 100 shares) and a high-priced one (100, 300 shares),
    /// both with `σ_p = 0.1` and mean volume 1000. Seed 42, 100 replications
    /// over `cv_u ∈ {0, 0.25, 0.5, 1}` and `ρ ∈ {-0.8, 0, 0.8}`.
    ///
    /// With so few trades a single price innovation moves the window's price
    /// level, so the sign of `ρ` decides whether volume shares lean towards
    /// or away from price moves: the grid shows Markowitz variance both
    /// above and below the market-based one.
    fn default() -> Self {
        let security = |base_price, shares| SecuritySim {
            base_price,
            sigma_p: 0.1,
            mean_volume: 1000.0,
            cv_u: 0.0,
            rho: 0.0,
            shares,
        };
        Self {
            base: SimConfig {
                seed: 42,
                trades: 4,
                securities: alloc::vec![security(10.0, 100.0), security(100.0, 300.0)],
            },
            cv_grid: alloc::vec![0.0, 0.25, 0.5, 1.0],
            rho_grid: alloc::vec![-0.8, 0.0, 0.8],
            replications: 100,
            taylor_a: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(invalid("replications must be at least 1".into()));
        }
        if self.cv_grid.is_empty() || self.rho_grid.is_empty() {
            return Err(invalid("cv and rho grids must not be empty".into()));
        }
        for &cv in &self.cv_grid {
            for &rho in &self.rho_grid {
                self.base.with_dispersion(cv, rho).validate()?;
            }
        }
        Ok(())
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = sum::mean(xs);
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let ss = sum::sum(xs.iter().map(|x| (x - m) * (x - m)));
    (m, libm::sqrt(ss / (xs.len() - 1) as f64))
}

/// Runs every grid cell, cv-major, using the same replication streams in
/// each cell.
pub fn divergence_experiment(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let options = ReportOptions {
        taylor_a: config.taylor_a,
        ..ReportOptions::default()
    };
    let mut rows = Vec::with_capacity(config.cv_grid.len() * config.rho_grid.len());
    for &cv_u in &config.cv_grid {
        for &rho in &config.rho_grid {
            let cell = config.base.with_dispersion(cv_u, rho);
            let mut theta_m = NeumaierSum::new();
            let mut theta = NeumaierSum::new();
            let mut theta_t = NeumaierSum::new();
            let mut divergences = Vec::with_capacity(config.replications);
            for rep in 0..config.replications {
                let (spec, tapes) = generate_replication(&cell, rep as u64)?;
                let report = analyze(&spec, &tapes, &options)?;
                theta_m += report.theta_m;
                theta += report.theta;
                if let Some(t) = report.theta_t {
                    theta_t += t;
                }
                divergences.extend(report.divergence);
            }
            let m = config.replications as f64;
            let (divergence_mean, divergence_stddev) = mean_std(&divergences);
            rows.push(SweepRow {
                cv_u,
                rho,
                theta_m_mean: theta_m.value() / m,
                theta_mean: theta.value() / m,
                divergence_mean,
                divergence_stddev,
                replications: config.replications,
                theta_t_mean: config.taylor_a.map(|_| theta_t.value() / m),
            });
        }
    }
    Ok(rows)
}
