//! Simulated cluster: P rank agents over the in-process transport, with
//! per-rank slowdown and shared-resource contention, producing idle-time,
//! makespan and steal metrics.
//!
//! Two clocks are available. The virtual clock is a discrete-event
//! simulation: single-threaded, exact and deterministic for a given seed.
//! The wall clock runs one OS thread per rank and measures real time.

mod invariants;
mod metrics;
mod profile;
pub mod presets;
mod threaded;
mod virtual_clock;
mod workload;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rma::{Event, Latency, RmaError};
use crate::sched::{Backoff, CtwsWindows, SchedError, SchedulerCounters};

pub use invariants::{check_accounting, check_single_token, check_steal_half};
pub use metrics::{
    check_steal_replay, idle_metrics, metrics_json, overhead_fraction, replay_steals,
    steal_statistics, trace_export, write_metrics_csv, write_summary_csv, write_timeline_csv,
    ClockMode, MetricsRecord, MetricsReport, MetricsSummary, RankMetrics, RankTotals,
    SchedulerMode, TaskRun, TraceRow,
};
pub use profile::{ContentionModel, SkewModel, WorkerProfile};
pub use threaded::{run_threaded, SyntheticExecutor, ThreadedOptions, ThreadedRun, UnknownTask};
pub use workload::{SyntheticTask, Workload};

/// Snapshot of one agent when the watchdog fires.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgentDump {
    pub rank: usize,
    pub phase: String,
    pub tasks_done: usize,
    pub pending: Option<u64>,
    pub holds_token: Option<bool>,
    pub finish_seen: Option<bool>,
}

impl std::fmt::Display for AgentDump {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "rank {}: {} after {} tasks (pending {:?}, token {:?}, finish seen {:?})",
            self.rank, self.phase, self.tasks_done, self.pending, self.holds_token, self.finish_seen
        )
    }
}

fn dump_lines(agents: &[AgentDump]) -> String {
    agents
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Scheduler(#[from] SchedError),
    #[error(transparent)]
    Transport(#[from] RmaError),
    #[error("watchdog fired at {at_ns} ns (limit {limit_ns} ns)\n{}", dump_lines(.agents))]
    Watchdog {
        at_ns: u64,
        limit_ns: u64,
        agents: Vec<AgentDump>,
    },
    #[error("task failed on rank {rank}: {message}")]
    Task { rank: usize, message: String },
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub ranks: usize,
    pub mode: SchedulerMode,
    pub clock: ClockMode,
    pub workload: Workload,
    pub skew: SkewModel,
    pub contention: ContentionModel,
    /// Per-operation transport delay. Paid virtually or by sleeping,
    /// depending on the clock.
    pub latency_fixed: Duration,
    pub latency_jitter: Duration,
    pub backoff: Backoff,
    pub seed: u64,
    /// Watchdog limit as a multiple of [`Experiment::ideal_makespan_ns`].
    pub watchdog_factor: f64,
}

impl Experiment {
    pub fn new(ranks: usize, mode: SchedulerMode, workload: Workload) -> Self {
        Experiment {
            ranks,
            mode,
            clock: ClockMode::Virtual,
            workload,
            skew: SkewModel::None,
            contention: ContentionModel::NONE,
            latency_fixed: Duration::ZERO,
            latency_jitter: Duration::ZERO,
            backoff: Backoff::default(),
            seed: 0,
            watchdog_factor: 50.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.ranks == 0 {
            return Err(SimError::Config("at least one rank is required".into()));
        }
        if !(self.watchdog_factor >= 1.0) {
            return Err(SimError::Config(format!(
                "watchdog factor must be at least 1, got {}",
                self.watchdog_factor
            )));
        }
        if self.backoff.initial.is_zero() || self.backoff.max < self.backoff.initial {
            return Err(SimError::Config("backoff needs 0 < initial <= max".into()));
        }
        self.workload.validate()?;
        self.contention.validate()
    }

    /// Perfectly balanced compute time per rank plus one token lap at the
    /// longest backoff, the least any run needs to detect termination.
    pub fn ideal_makespan_ns(&self) -> u64 {
        let compute = self.workload.total_nominal_ns() / self.ranks.max(1) as u64;
        let lap = self.backoff.max.as_nanos() as u64 * self.ranks as u64;
        compute + lap
    }

    pub fn watchdog_ns(&self) -> u64 {
        (self.ideal_makespan_ns() as f64 * self.watchdog_factor) as u64
    }

    pub(crate) fn latency(&self, mode: crate::rma::LatencyMode) -> Latency {
        Latency {
            fixed: self.latency_fixed,
            jitter: self.latency_jitter,
            mode,
        }
    }

    pub fn profiles(&self) -> Result<Vec<WorkerProfile>, SimError> {
        self.skew.profiles(self.ranks, self.seed, self.watchdog_ns())
    }
}

/// Metrics plus the raw material for invariant checks.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: MetricsRecord,
    pub counters: Vec<SchedulerCounters>,
    /// Transport event log; empty unless requested (virtual clock only).
    pub events: Vec<Event>,
    /// Scheduler window ids, to interpret `events`.
    pub windows: Option<CtwsWindows>,
}

pub fn run_experiment(exp: &Experiment) -> Result<MetricsRecord, SimError> {
    Ok(run_experiment_traced(exp, false)?.metrics)
}

/// Like [`run_experiment`], optionally keeping the transport event log.
pub fn run_experiment_traced(exp: &Experiment, record_events: bool) -> Result<RunOutput, SimError> {
    exp.validate()?;
    match exp.clock {
        ClockMode::Virtual => virtual_clock::run(exp, record_events),
        ClockMode::Wall => threaded::run_synthetic(exp),
    }
}
