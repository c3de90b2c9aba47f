use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ctws_core::sim::{ClockMode, SchedulerMode};
use serde::de::DeserializeOwned;

use crate::config::{ExperimentConfig, ModelKind, SkewKind, WorkloadKind};

#[derive(Debug, Parser)]
#[command(name = "ctws", version, about = "Token-based work stealing experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment (or the node-count sweep) and write its artifacts.
    Run(Box<RunArgs>),
    /// Compare two run directories.
    Compare { a: PathBuf, b: PathBuf },
    /// Run the finite-difference kernel oracle suite.
    ValidateKernel,
}

/// Snake-case serde names, with dashes accepted for underscores.
fn serde_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unknown value '{s}'"))
}

/// Flags mirror the config keys; each one overrides the config file.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// JSON config, or the manifest.json of an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run P = 4, 8, 16, 32, 64 with 10 tasks per rank; one summary row each.
    #[arg(long)]
    pub paper_sweep: bool,

    #[arg(long, value_enum)]
    pub workload: Option<WorkloadKind>,
    #[arg(long, value_parser = serde_name::<SchedulerMode>)]
    pub sched: Option<SchedulerMode>,
    #[arg(short = 'P', long)]
    pub ranks: Option<usize>,
    #[arg(long)]
    pub tasks: Option<usize>,
    #[arg(long)]
    pub iterations: Option<u32>,
    #[arg(long)]
    pub iteration_ms: Option<f64>,
    #[arg(long, value_parser = serde_name::<ClockMode>)]
    pub clock: Option<ClockMode>,
    #[arg(long, value_enum)]
    pub skew: Option<SkewKind>,
    #[arg(long)]
    pub skew_lo: Option<f64>,
    #[arg(long)]
    pub skew_hi: Option<f64>,
    #[arg(long)]
    pub skew_segment_ms: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub skew_multipliers: Option<Vec<f64>>,
    #[arg(long)]
    pub contention_capacity: Option<usize>,
    #[arg(long)]
    pub contention_access_us: Option<f64>,
    #[arg(long)]
    pub latency_us: Option<f64>,
    #[arg(long)]
    pub jitter_us: Option<f64>,
    #[arg(long)]
    pub backoff_initial_ms: Option<f64>,
    #[arg(long)]
    pub backoff_max_ms: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub watchdog_factor: Option<f64>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub c_top: Option<f64>,
    #[arg(long)]
    pub c_bottom: Option<f64>,
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub dt_ms: Option<f64>,
    #[arg(long)]
    pub f_peak: Option<f64>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    #[arg(long)]
    pub snapshot_dir: Option<PathBuf>,
    /// Output directory (default: a named directory under $CTWS_OUTPUT_ROOT).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

macro_rules! overlay {
    ($args:expr, $cfg:expr, $($field:ident),* $(,)?) => {
        $(if let Some(v) = &$args.$field {
            $cfg.$field = v.clone();
        })*
    };
}

impl RunArgs {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        overlay!(
            self,
            cfg,
            workload,
            sched,
            ranks,
            tasks,
            iterations,
            iteration_ms,
            clock,
            skew,
            skew_lo,
            skew_hi,
            skew_segment_ms,
            skew_multipliers,
            contention_capacity,
            contention_access_us,
            latency_us,
            jitter_us,
            backoff_initial_ms,
            backoff_max_ms,
            seed,
            watchdog_factor,
            model,
            grid,
            dx,
            c_top,
            c_bottom,
            nt,
            dt_ms,
            f_peak,
            snapshot_every,
        );
        if self.model_file.is_some() {
            cfg.model_file = self.model_file.clone();
        }
        if self.snapshot_dir.is_some() {
            cfg.snapshot_dir = self.snapshot_dir.clone();
        }
        if self.output.is_some() {
            cfg.output = self.output.clone();
        }
    }
}
