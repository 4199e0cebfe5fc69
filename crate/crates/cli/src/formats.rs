//! File formats: trade-tape and portfolio CSVs, report JSON/CSV and the
//! sweep CSV.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;
use tapevar::{PortfolioSpec, SweepConfig, SweepRow, VarianceReport};

use crate::error::{CliError, Result};
use crate::time::{parse_timestamp, TimeFormat};

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Deserialize)]
struct TapeRecord {
    security_id: String,
    timestamp: String,
    price: f64,
    volume: f64,
    #[serde(default)]
    value: Option<f64>,
}

/// One row of a trade-tape CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TapeRow {
    /// 1-based data row; the header is not counted.
    pub row: usize,
    pub security_id: String,
    pub timestamp: i64,
    pub price: f64,
    pub volume: f64,
    /// Recorded trade value, when the file has a `value` column.
    pub value: Option<f64>,
}

fn check_headers(headers: &csv::StringRecord, required: &[&str]) -> Result<()> {
    for name in required {
        if !headers.iter().any(|h| h.trim() == *name) {
            return Err(CliError::Parse(format!("missing column {name:?}")));
        }
    }
    Ok(())
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

/// Reads `security_id,timestamp,price,volume[,value]`.
pub fn read_tape<R: Read>(input: R, format: TimeFormat) -> Result<Vec<TapeRow>> {
    let mut rdr = reader(input);
    check_headers(rdr.headers()?, &["security_id", "timestamp", "price", "volume"])?;
    let mut rows = Vec::new();
    for (k, rec) in rdr.deserialize::<TapeRecord>().enumerate() {
        let row = k + 1;
        let rec = rec?;
        let timestamp =
            parse_timestamp(&rec.timestamp, format).map_err(|e| CliError::Parse(format!("row {row}: {e}")))?;
        rows.push(TapeRow {
            row,
            security_id: rec.security_id,
            timestamp,
            price: rec.price,
            volume: rec.volume,
            value: rec.value,
        });
    }
    Ok(rows)
}

pub fn read_tape_file(path: &Path, format: TimeFormat) -> Result<Vec<TapeRow>> {
    read_tape(open(path)?, format)
}

/// Rows grouped by security, file order kept within each group.
pub fn group_by_security(rows: &[TapeRow]) -> BTreeMap<&str, Vec<&TapeRow>> {
    let mut groups: BTreeMap<&str, Vec<&TapeRow>> = BTreeMap::new();
    for row in rows {
        groups.entry(row.security_id.as_str()).or_default().push(row);
    }
    groups
}

#[derive(Debug, Deserialize)]
struct PortfolioRecord {
    security_id: String,
    shares: f64,
    base_price: f64,
}

/// Reads `security_id,shares,base_price`.
pub fn read_portfolio<R: Read>(input: R) -> Result<PortfolioSpec> {
    let mut rdr = reader(input);
    check_headers(rdr.headers()?, &["security_id", "shares", "base_price"])?;
    let mut holdings = Vec::new();
    for rec in rdr.deserialize::<PortfolioRecord>() {
        let rec = rec?;
        holdings.push((rec.security_id, rec.shares, rec.base_price));
    }
    Ok(PortfolioSpec::new(holdings)?)
}

pub fn read_portfolio_file(path: &Path) -> Result<PortfolioSpec> {
    read_portfolio(open(path)?)
}

pub fn write_report_json<W: Write>(report: &VarianceReport, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_report_json<R: Read>(input: R) -> Result<VarianceReport> {
    Ok(serde_json::from_reader(input)?)
}

/// Shortest round-trip form; scientific notation for very small or large
/// magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub const REPORT_CSV_HEADER: [&str; 17] = [
    "theta_m",
    "theta",
    "theta_t",
    "taylor_a",
    "mean_return",
    "divergence",
    "q_mean",
    "q_mean_sq",
    "w_mean",
    "w_mean_sq",
    "psi_q",
    "psi_w",
    "cov_qw",
    "psi_sq",
    "chi_sq",
    "phi",
    "covariance_weighting",
];

/// Scalar fields only; `theta_jk` and the id list stay in the JSON form.
pub fn write_report_csv<W: Write>(report: &VarianceReport, out: W) -> Result<()> {
    let m = &report.moments;
    let weighting = match report.covariance_weighting {
        tapevar::CovarianceWeighting::Equal => "equal",
        tapevar::CovarianceWeighting::Volume => "volume",
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_CSV_HEADER)?;
    w.write_record([
        num(report.theta_m),
        num(report.theta),
        opt(report.theta_t),
        opt(report.taylor_a),
        num(report.mean_return),
        opt(report.divergence),
        num(m.q_mean),
        num(m.q_mean_sq),
        num(m.w_mean),
        num(m.w_mean_sq),
        num(m.psi_q),
        num(m.psi_w),
        num(m.cov_qw),
        num(m.psi_sq),
        num(m.chi_sq),
        num(m.phi),
        weighting.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn read_sweep_config<R: Read>(mut input: R) -> Result<SweepConfig> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    toml::from_str(&text).map_err(|e| CliError::Parse(format!("config: {e}")))
}

pub fn read_sweep_config_file(path: &Path) -> Result<SweepConfig> {
    read_sweep_config(open(path)?)
}

/// `#`-prefixed TOML echo of the configuration, then the rows.
pub fn write_sweep_csv<W: Write>(config: &SweepConfig, rows: &[SweepRow], mut out: W) -> Result<()> {
    let echo = toml::to_string(config).map_err(|e| CliError::Parse(format!("config: {e}")))?;
    for line in echo.lines() {
        if line.is_empty() {
            writeln!(out, "#")?;
        } else {
            writeln!(out, "# {line}")?;
        }
    }
    let with_taylor = config.taylor_a.is_some();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "cv_u",
        "rho",
        "theta_m_mean",
        "theta_mean",
        "divergence_mean",
        "divergence_stddev",
        "replications",
    ];
    if with_taylor {
        header.push("theta_t_mean");
    }
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![
            num(row.cv_u),
            num(row.rho),
            num(row.theta_m_mean),
            num(row.theta_mean),
            num(row.divergence_mean),
            num(row.divergence_stddev),
            row.replications.to_string(),
        ];
        if with_taylor {
            rec.push(opt(row.theta_t_mean));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
