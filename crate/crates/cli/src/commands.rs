use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use tapevar::{
    approx_eq, bin_raw_trades, divergence_experiment, validate_tape, AveragingWindow, CovarianceWeighting,
    LeadingBinPolicy, RawTrade, ReportOptions, SecuritySim, SecurityTape, SweepConfig, Violation, INGEST_TOLERANCE,
};

use crate::error::{CliError, Result};
use crate::formats::{self, TapeRow};
use crate::time::{parse_duration, parse_timestamp, TimeFormat};

#[derive(Debug, Parser)]
#[command(
    name = "tapevar",
    version,
    about = "Market-based and Markowitz variance of a fixed portfolio"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a trade-tape CSV and list violations, one per line.
    Validate(ValidateArgs),
    /// Build the portfolio tape and report both variances.
    Analyze(AnalyzeArgs),
    /// Sweep simulated volume dispersion and coupling; emit a CSV.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum LeadingBin {
    #[default]
    Strict,
    BackFill,
}

impl From<LeadingBin> for LeadingBinPolicy {
    fn from(l: LeadingBin) -> Self {
        match l {
            LeadingBin::Strict => LeadingBinPolicy::Strict,
            LeadingBin::BackFill => LeadingBinPolicy::BackFill,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Weighting {
    #[default]
    Equal,
    Volume,
}

impl From<Weighting> for CovarianceWeighting {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::Equal => CovarianceWeighting::Equal,
            Weighting::Volume => CovarianceWeighting::Volume,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Number of trade instants `N` in the window.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Window center, in the `--timestamps` format.
    #[arg(long, requires = "width")]
    pub center: Option<String>,
    /// Window width: integer nanoseconds or a duration such as `390m`.
    #[arg(long, requires = "center")]
    pub width: Option<String>,
    #[arg(long, value_enum, default_value_t = TimeFormat::Nanos)]
    pub timestamps: TimeFormat,
    #[arg(long, value_enum, default_value_t = LeadingBin::Strict)]
    pub leading_bin: LeadingBin,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub tape: PathBuf,
    /// Base prices for the binned check; without it each security's first
    /// price is used.
    #[arg(long)]
    pub portfolio: Option<PathBuf>,
    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub portfolio: PathBuf,
    #[arg(long)]
    pub tape: PathBuf,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub taylor_a: Option<f64>,
    #[arg(long, value_enum, default_value_t = Weighting::Equal)]
    pub covariance_weighting: Weighting,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML sweep configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid_cv: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid_rho: Option<Vec<f64>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub trades: Option<usize>,
    /// `BASE_PRICE:SHARES`, repeatable; replaces the configured securities.
    #[arg(long = "security", value_parser = parse_security)]
    pub securities: Vec<(f64, f64)>,
    #[arg(long)]
    pub sigma_p: Option<f64>,
    #[arg(long)]
    pub mean_volume: Option<f64>,
    #[arg(long)]
    pub taylor_a: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_security(s: &str) -> std::result::Result<(f64, f64), String> {
    let (p, q) = s.split_once(':').ok_or("expected BASE_PRICE:SHARES")?;
    let p = p.trim().parse::<f64>().map_err(|e| format!("base price: {e}"))?;
    let q = q.trim().parse::<f64>().map_err(|e| format!("shares: {e}"))?;
    Ok((p, q))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                2
            } else {
                let _ = write!(stdout, "{}", e.render());
                0
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Validate(a) => cmd_validate(a, stdout),
        Command::Analyze(a) => cmd_analyze(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Problems visible on a single CSV row.
fn row_violations(row: &TapeRow) -> Vec<&'static str> {
    let mut out = Vec::new();
    let finite = row.price.is_finite() && row.volume.is_finite() && row.value.is_none_or(f64::is_finite);
    if !finite {
        out.push(Violation::NonFinite(0).code());
        return out;
    }
    if row.price <= 0.0 {
        out.push(Violation::NonpositivePrice(0).code());
    }
    if row.volume < 0.0 {
        out.push(Violation::NegativeVolume(0).code());
    }
    if let Some(value) = row.value {
        if !approx_eq(value, row.price * row.volume, INGEST_TOLERANCE) {
            out.push(Violation::ValueMismatch(0).code());
        }
    }
    out
}

/// Explicit `--center`/`--width` when given, otherwise inferred from `rows`.
fn window_for(args: &WindowArgs, rows: &[&TapeRow], n: usize) -> Result<AveragingWindow> {
    if let (Some(center), Some(width)) = (&args.center, &args.width) {
        let center = parse_timestamp(center, args.timestamps)?;
        let width = parse_duration(width)?;
        return Ok(AveragingWindow::new(center, width, n)?);
    }
    infer_window(rows, n)
}

/// Smallest admissible window starting at the first tick and reaching the
/// last one.
pub fn infer_window(rows: &[&TapeRow], n: usize) -> Result<AveragingWindow> {
    let start = rows
        .iter()
        .map(|r| r.timestamp)
        .min()
        .ok_or_else(|| CliError::Invalid("tape is empty".into()))?;
    let end = rows.iter().map(|r| r.timestamp).max().unwrap_or(start);
    if n < 2 {
        return Err(tapevar::Error::DegenerateWindow(n).into());
    }
    let step = i64::try_from(if n.is_multiple_of(2) { n } else { 2 * n })
        .map_err(|_| CliError::Invalid("bin count too large".into()))?;
    let span = end
        .checked_sub(start)
        .ok_or_else(|| CliError::Invalid("tape time span overflows".into()))?;
    let width = (span / step + 1)
        .checked_mul(step)
        .ok_or_else(|| CliError::Invalid("tape time span overflows".into()))?;
    Ok(AveragingWindow::from_start(start, width, n)?)
}

fn raw_trades(rows: &[&TapeRow]) -> Vec<RawTrade> {
    rows.iter()
        .map(|r| RawTrade {
            timestamp: r.timestamp,
            price: r.price,
            volume: r.volume,
        })
        .collect()
}

pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let rows = formats::read_tape_file(&args.tape, args.window.timestamps)?;
    let portfolio = args
        .portfolio
        .as_deref()
        .map(formats::read_portfolio_file)
        .transpose()?;
    let all: Vec<&TapeRow> = rows.iter().collect();
    let window = args
        .window
        .bins
        .map(|n| window_for(&args.window, &all, n))
        .transpose()?;

    let mut count = 0usize;
    let mut report = |line: String| -> Result<()> {
        count += 1;
        writeln!(out, "VIOLATION {line}")?;
        Ok(())
    };
    for (id, group) in formats::group_by_security(&rows) {
        let mut row_clean = true;
        let mut total = 0.0;
        for row in &group {
            let codes = row_violations(row);
            row_clean &= codes.is_empty();
            for code in codes {
                report(format!("{code} security={id} row={}", row.row))?;
            }
            total += row.volume;
        }
        if row_clean && total <= 0.0 {
            report(format!("{} security={id}", Violation::ZeroTotalVolume.code()))?;
        }
        let Some(window) = &window else { continue };
        if !row_clean {
            continue;
        }
        for row in &group {
            if !window.contains(row.timestamp) {
                report(format!("timestamp_out_of_window security={id} row={}", row.row))?;
                row_clean = false;
            }
        }
        if !row_clean {
            continue;
        }
        let base_price = match portfolio.as_ref().and_then(|p| p.holding(id)) {
            Some(h) => h.base_price(),
            None => group[0].price,
        };
        match bin_raw_trades(
            id,
            &raw_trades(&group),
            window,
            base_price,
            args.window.leading_bin.into(),
        ) {
            Ok(tape) => {
                for v in validate_tape(&tape).violations {
                    // zero total volume was already reported from the rows
                    if v == Violation::ZeroTotalVolume {
                        continue;
                    }
                    match v.index() {
                        Some(i) => report(format!("{} security={id} bin={i}", v.code()))?,
                        None => report(format!("{} security={id}", v.code()))?,
                    }
                }
            }
            Err(tapevar::Error::EmptyLeadingBin(_)) => report(format!("empty_leading_bin security={id}"))?,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(if count == 0 { 0 } else { 1 })
}

/// Bins each held security's ticks on the window; unheld securities are
/// skipped.
pub fn load_tapes(args: &AnalyzeArgs) -> Result<(tapevar::PortfolioSpec, Vec<SecurityTape>)> {
    let spec = formats::read_portfolio_file(&args.portfolio)?;
    let rows = formats::read_tape_file(&args.tape, args.window.timestamps)?;
    for row in &rows {
        if let Some(value) = row.value {
            if !approx_eq(value, row.price * row.volume, INGEST_TOLERANCE) {
                return Err(CliError::Invalid(format!(
                    "ValueMismatch security={} row={}",
                    row.security_id, row.row
                )));
            }
        }
    }
    let groups = formats::group_by_security(&rows);
    let held: BTreeMap<&str, &Vec<&TapeRow>> = groups
        .iter()
        .filter(|(id, _)| spec.holding(id).is_some())
        .map(|(id, g)| (*id, g))
        .collect();
    if let Some(h) = spec.holdings().iter().find(|h| !held.contains_key(h.security_id())) {
        return Err(tapevar::Error::MissingSecurity(h.security_id().into()).into());
    }
    let n = args
        .window
        .bins
        .ok_or_else(|| CliError::Parse("--bins is required".into()))?;
    let all: Vec<&TapeRow> = held.values().flat_map(|g| g.iter().copied()).collect();
    let window = window_for(&args.window, &all, n)?;
    let mut tapes = Vec::with_capacity(held.len());
    for (id, group) in held {
        let base_price = spec.holding(id).map(|h| h.base_price()).unwrap_or(f64::NAN);
        tapes.push(bin_raw_trades(
            id,
            &raw_trades(group),
            &window,
            base_price,
            args.window.leading_bin.into(),
        )?);
    }
    Ok((spec, tapes))
}

fn with_output(
    path: Option<&Path>,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::io(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(|e| CliError::io(p, e))
        }
        None => f(stdout),
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<i32> {
    let (spec, tapes) = load_tapes(args)?;
    let options = ReportOptions {
        taylor_a: args.taylor_a,
        weighting: args.covariance_weighting.into(),
    };
    let report = tapevar::variance::analyze(&spec, &tapes, &options)?;
    with_output(args.output.as_deref(), stdout, |w| match args.format {
        ReportFormat::Json => formats::write_report_json(&report, w),
        ReportFormat::Csv => formats::write_report_csv(&report, w),
    })?;
    Ok(0)
}

/// Defaults, then the config file, then flags.
pub fn sweep_config(args: &SimulateArgs) -> Result<SweepConfig> {
    let mut config = match &args.config {
        Some(path) => formats::read_sweep_config_file(path)?,
        None => SweepConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.base.seed = seed;
    }
    if let Some(trades) = args.trades {
        config.base.trades = trades;
    }
    if let Some(cv) = &args.grid_cv {
        config.cv_grid = cv.clone();
    }
    if let Some(rho) = &args.grid_rho {
        config.rho_grid = rho.clone();
    }
    if let Some(reps) = args.reps {
        config.replications = reps;
    }
    if args.taylor_a.is_some() {
        config.taylor_a = args.taylor_a;
    }
    if !args.securities.is_empty() {
        let template = config.base.securities.first().cloned().unwrap_or(SecuritySim {
            base_price: 1.0,
            sigma_p: 0.1,
            mean_volume: 1000.0,
            cv_u: 0.0,
            rho: 0.0,
            shares: 1.0,
        });
        config.base.securities = args
            .securities
            .iter()
            .map(|&(base_price, shares)| SecuritySim {
                base_price,
                shares,
                ..template.clone()
            })
            .collect();
    }
    for s in &mut config.base.securities {
        if let Some(sigma) = args.sigma_p {
            s.sigma_p = sigma;
        }
        if let Some(mu) = args.mean_volume {
            s.mean_volume = mu;
        }
    }
    Ok(config)
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let config = sweep_config(args)?;
    let rows = divergence_experiment(&config)?;
    with_output(args.output.as_deref(), stdout, |w| {
        formats::write_sweep_csv(&config, &rows, w)
    })?;
    Ok(0)
}
