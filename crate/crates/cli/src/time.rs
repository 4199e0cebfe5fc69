//! Timestamp and duration parsing. Internally every time is `i64` nanoseconds
//! since the Unix epoch.

use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime};

use crate::error::{CliError, Result};

/// How timestamps are written in input files and window flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum TimeFormat {
    /// Integer nanoseconds since the Unix epoch.
    #[default]
    Nanos,
    /// RFC 3339 / ISO-8601; values without an offset are read as UTC.
    Iso8601,
}

pub fn parse_timestamp(s: &str, format: TimeFormat) -> Result<i64> {
    let s = s.trim();
    match format {
        TimeFormat::Nanos => i64::from_str(s).map_err(|e| CliError::Parse(format!("bad timestamp {s:?}: {e}"))),
        TimeFormat::Iso8601 => {
            let utc = DateTime::parse_from_rfc3339(s)
                .map(|t| t.to_utc())
                .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f").map(|t| t.and_utc()))
                .map_err(|e| CliError::Parse(format!("bad timestamp {s:?}: {e}")))?;
            utc.timestamp_nanos_opt()
                .ok_or_else(|| CliError::Parse(format!("timestamp {s:?} out of range")))
        }
    }
}

/// A plain integer is nanoseconds; anything else goes through `humantime`
/// (`390m`, `1h 30m`, `250ms`).
pub fn parse_duration(s: &str) -> Result<i64> {
    let s = s.trim();
    if let Ok(n) = i64::from_str(s) {
        return Ok(n);
    }
    let d = humantime::parse_duration(s).map_err(|e| CliError::Parse(format!("bad duration {s:?}: {e}")))?;
    i64::try_from(d.as_nanos()).map_err(|_| CliError::Parse(format!("duration {s:?} too long")))
}
