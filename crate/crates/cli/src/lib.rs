//! File formats and the `tapevar` command line on top of the `tapevar`
//! core crate.
//!
//! Exit codes are stable across subcommands: 0 on success, 1 on domain
//! errors and data violations, 2 on I/O, parse and usage errors.

pub mod commands;
pub mod error;
pub mod formats;
pub mod time;

pub use crate::commands::{run, Cli};
pub use crate::error::{CliError, Result};
