//! `ctws` front end: parses configs and flags, runs synthetic or migration
//! experiments, and writes their artifacts atomically.

mod args;
mod commands;
mod config;
mod output;

use std::ffi::OsString;

use clap::Parser;
use thiserror::Error;

pub use args::{Cli, Command, RunArgs};
pub use commands::{compare, run, validate_kernel};
pub use config::{ExperimentConfig, ModelKind, SkewKind, WorkloadKind};
pub use output::{resolve_output, OUTPUT_ROOT_VAR};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration: exit code 2.
    #[error("{0}")]
    Usage(String),
    /// The run itself failed: exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub(crate) fn runtime<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(&a),
        Command::Compare { a, b } => compare(&a, &b),
        Command::ValidateKernel => validate_kernel(),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ctws: {e}");
            e.exit_code()
        }
    }
}
