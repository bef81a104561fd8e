//! `ehmm`: command-line front end. Reads wide price (or return) CSVs, runs the
//! estimator and writes JSON reports plus flat CSV files for tables and plots.
//!
//! Every JSON report carries a [`report::RunManifest`] from which
//! `ehmm replay` re-runs the command and reproduces the report byte for byte.

pub mod args;
pub mod commands;
pub mod input;
pub mod output;
pub mod report;

use std::ffi::OsString;

use clap::Parser;

pub use args::Cli;

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Bad flags, bad configuration or inconsistent options.
pub const EXIT_USAGE: i32 = 1;
/// Unreadable or malformed input, or output that could not be written.
pub const EXIT_DATA: i32 = 2;
/// Estimation failed (no usable start, collapsed state, too few bootstrap refits).
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<ehmm_core::Error> for CliError {
    fn from(e: ehmm_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else if matches!(e, ehmm_core::Error::Config(_) | ehmm_core::Error::InvalidTau(_)) {
            CliError::Usage(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

/// Parse `argv` (program name first) and run the command; returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::dispatch(cli, &argv) {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
