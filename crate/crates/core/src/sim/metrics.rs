use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::rma::Rank;
use crate::sched::{block_partition, StealRecord, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerMode {
    /// Fixed block partition, no rebalancing.
    Static,
    /// Cyclic token-based work stealing.
    Ctws,
}

impl std::fmt::Display for SchedulerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchedulerMode::Static => "static",
            SchedulerMode::Ctws => "ctws",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// Discrete-event simulation; times are exact virtual nanoseconds.
    Virtual,
    /// Real threads; times are measured.
    Wall,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankMetrics {
    pub rank: usize,
    pub tasks: usize,
    pub compute_ns: u64,
    /// Time inside scheduler calls that were not waiting for the token.
    pub scheduler_ns: u64,
    pub busy_ns: u64,
    /// `makespan - busy`; includes token waits and time after finishing.
    pub idle_ns: u64,
    pub waiting_ns: u64,
    pub finished_ns: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRun {
    pub rank: usize,
    pub task: TaskId,
    pub start_ns: u64,
    pub end_ns: u64,
}

/// Raw per-rank totals fed to [`MetricsRecord::assemble`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RankTotals {
    pub compute_ns: u64,
    pub scheduler_ns: u64,
    pub waiting_ns: u64,
    pub finished_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub mode: SchedulerMode,
    pub clock: ClockMode,
    pub ranks: usize,
    pub tasks: usize,
    pub seed: u64,
    pub makespan_ns: u64,
    pub per_rank: Vec<RankMetrics>,
    /// Sorted by rank, then start.
    pub runs: Vec<TaskRun>,
    /// Sorted by attempt number.
    pub steals: Vec<StealRecord>,
    pub token_hops: u64,
}

impl MetricsRecord {
    /// Derives busy and idle times. The makespan is the latest finish
    /// unless a larger one (for example including a reduction) is given.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        mode: SchedulerMode,
        clock: ClockMode,
        seed: u64,
        totals: &[RankTotals],
        mut runs: Vec<TaskRun>,
        mut steals: Vec<StealRecord>,
        token_hops: u64,
        makespan_ns: Option<u64>,
    ) -> Self {
        let latest = totals.iter().map(|t| t.finished_ns).max().unwrap_or(0);
        let makespan_ns = makespan_ns.unwrap_or(0).max(latest);
        runs.sort_by_key(|r| (r.rank, r.start_ns, r.task));
        steals.sort_by_key(|s| s.attempt);
        let per_rank = totals
            .iter()
            .enumerate()
            .map(|(rank, t)| {
                let busy_ns = t.compute_ns + t.scheduler_ns;
                RankMetrics {
                    rank,
                    tasks: runs.iter().filter(|r| r.rank == rank).count(),
                    compute_ns: t.compute_ns,
                    scheduler_ns: t.scheduler_ns,
                    busy_ns,
                    idle_ns: makespan_ns.saturating_sub(busy_ns),
                    waiting_ns: t.waiting_ns,
                    finished_ns: t.finished_ns,
                }
            })
            .collect();
        MetricsRecord {
            mode,
            clock,
            ranks: totals.len(),
            tasks: runs.len(),
            seed,
            makespan_ns,
            per_rank,
            runs,
            steals,
            token_hops,
        }
    }

    pub fn summary(&self) -> MetricsSummary {
        let (avg_idle_pct, max_idle_pct) = idle_metrics(self);
        let (steal_attempts, failed_steals) = steal_statistics(self);
        MetricsSummary {
            mode: self.mode,
            clock: self.clock,
            ranks: self.ranks,
            tasks: self.tasks,
            seed: self.seed,
            makespan_s: self.makespan_ns as f64 * 1e-9,
            avg_idle_pct,
            max_idle_pct,
            steal_attempts,
            failed_steals,
            token_hops: self.token_hops,
            overhead_fraction: overhead_fraction(self),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub mode: SchedulerMode,
    pub clock: ClockMode,
    pub ranks: usize,
    pub tasks: usize,
    pub seed: u64,
    pub makespan_s: f64,
    pub avg_idle_pct: f64,
    pub max_idle_pct: f64,
    pub steal_attempts: u64,
    pub failed_steals: u64,
    pub token_hops: u64,
    pub overhead_fraction: f64,
}

/// `(average, maximum)` idle time as a percentage of the makespan.
pub fn idle_metrics(record: &MetricsRecord) -> (f64, f64) {
    if record.makespan_ns == 0 || record.per_rank.is_empty() {
        return (0.0, 0.0);
    }
    let pct: Vec<f64> = record
        .per_rank
        .iter()
        .map(|r| 100.0 * r.idle_ns as f64 / record.makespan_ns as f64)
        .collect();
    let avg = pct.iter().sum::<f64>() / pct.len() as f64;
    let max = pct.iter().fold(0.0f64, |m, &v| m.max(v));
    (avg, max)
}

/// `(attempts, failed attempts)`.
pub fn steal_statistics(record: &MetricsRecord) -> (u64, u64) {
    let attempts = record.steals.len() as u64;
    let failed = record.steals.iter().filter(|s| s.stolen.is_empty()).count() as u64;
    (attempts, failed)
}

/// Scheduler time over busy time, summed over ranks.
pub fn overhead_fraction(record: &MetricsRecord) -> f64 {
    let sched: u64 = record.per_rank.iter().map(|r| r.scheduler_ns).sum();
    let busy: u64 = record.per_rank.iter().map(|r| r.busy_ns).sum();
    if busy == 0 {
        0.0
    } else {
        sched as f64 / busy as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    /// Position of the rank when ranks are ordered by idle time.
    pub position: usize,
    pub rank: usize,
    pub task: TaskId,
    pub start_ns: u64,
    pub end_ns: u64,
}

/// Task runs grouped by rank, ranks ordered by ascending idle time (ties by
/// rank), runs within a rank by start time.
pub fn trace_export(record: &MetricsRecord) -> Vec<TraceRow> {
    let mut order: Vec<&RankMetrics> = record.per_rank.iter().collect();
    order.sort_by_key(|r| (r.idle_ns, r.rank));
    let mut rows = Vec::with_capacity(record.runs.len());
    for (position, rm) in order.into_iter().enumerate() {
        let mut runs: Vec<&TaskRun> = record.runs.iter().filter(|r| r.rank == rm.rank).collect();
        runs.sort_by_key(|r| (r.start_ns, r.task));
        rows.extend(runs.into_iter().map(|r| TraceRow {
            position,
            rank: r.rank,
            task: r.task,
            start_ns: r.start_ns,
            end_ns: r.end_ns,
        }));
    }
    rows
}

pub fn write_metrics_csv<W: Write>(out: W, record: &MetricsRecord) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "rank",
        "tasks",
        "compute_ns",
        "scheduler_ns",
        "busy_ns",
        "idle_ns",
        "waiting_ns",
        "finished_ns",
        "idle_pct",
    ])?;
    for r in &record.per_rank {
        let pct = if record.makespan_ns == 0 {
            0.0
        } else {
            100.0 * r.idle_ns as f64 / record.makespan_ns as f64
        };
        w.write_record([
            r.rank.to_string(),
            r.tasks.to_string(),
            r.compute_ns.to_string(),
            r.scheduler_ns.to_string(),
            r.busy_ns.to_string(),
            r.idle_ns.to_string(),
            r.waiting_ns.to_string(),
            r.finished_ns.to_string(),
            format!("{pct:.6}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub summary: MetricsSummary,
    pub per_rank: Vec<RankMetrics>,
}

pub fn metrics_json(record: &MetricsRecord) -> String {
    let report = MetricsReport {
        summary: record.summary(),
        per_rank: record.per_rank.clone(),
    };
    serde_json::to_string_pretty(&report).expect("metrics serialize")
}

pub fn write_timeline_csv<W: Write>(out: W, record: &MetricsRecord) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["position", "rank", "task", "start_ns", "end_ns", "duration_ns"])?;
    for row in trace_export(record) {
        w.write_record([
            row.position.to_string(),
            row.rank.to_string(),
            row.task.to_string(),
            row.start_ns.to_string(),
            row.end_ns.to_string(),
            (row.end_ns - row.start_ns).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, rows: &[MetricsSummary]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mode",
        "ranks",
        "tasks",
        "seed",
        "makespan_s",
        "avg_idle_pct",
        "max_idle_pct",
        "steal_attempts",
        "failed_steals",
        "token_hops",
        "overhead_fraction",
    ])?;
    for s in rows {
        w.write_record([
            s.mode.to_string(),
            s.ranks.to_string(),
            s.tasks.to_string(),
            s.seed.to_string(),
            format!("{:.9}", s.makespan_s),
            format!("{:.6}", s.avg_idle_pct),
            format!("{:.6}", s.max_idle_pct),
            s.steal_attempts.to_string(),
            s.failed_steals.to_string(),
            s.token_hops.to_string(),
            format!("{:.9}", s.overhead_fraction),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Applies `steals` in attempt order to the block partition of `tasks`
/// and returns the resulting owner of every task. Fails if a steal takes
/// a task its victim did not own at that point.
pub fn replay_steals(
    tasks: &[TaskId],
    ranks: usize,
    steals: &[StealRecord],
) -> Result<BTreeMap<TaskId, Rank>, String> {
    let mut owner = BTreeMap::new();
    for (rank, part) in block_partition(tasks.len(), ranks).into_iter().enumerate() {
        for &id in &tasks[part] {
            owner.insert(id, Rank(rank));
        }
    }
    let mut ordered: Vec<&StealRecord> = steals.iter().collect();
    ordered.sort_by_key(|s| s.attempt);
    for s in ordered {
        for id in &s.stolen {
            match owner.get_mut(id) {
                Some(o) if *o == s.victim => *o = s.thief,
                Some(o) => {
                    return Err(format!(
                        "attempt {}: rank {} stole task {id} from rank {}, but rank {o} owns it",
                        s.attempt, s.thief, s.victim
                    ))
                }
                None => return Err(format!("attempt {}: unknown task {id}", s.attempt)),
            }
        }
    }
    Ok(owner)
}

/// Checks the steal log against the recorded runs: replaying it from the
/// initial partition must put every task on the rank that ran it.
pub fn check_steal_replay(record: &MetricsRecord, tasks: &[TaskId]) -> Result<(), String> {
    let owner = replay_steals(tasks, record.ranks, &record.steals)?;
    let ran: BTreeMap<TaskId, usize> = record.runs.iter().map(|r| (r.task, r.rank)).collect();
    if ran.len() != record.runs.len() {
        return Err("a task ran more than once".into());
    }
    let expected: BTreeSet<TaskId> = tasks.iter().copied().collect();
    let got: BTreeSet<TaskId> = ran.keys().copied().collect();
    if expected != got {
        return Err(format!("{} tasks expected, {} ran", expected.len(), got.len()));
    }
    for (id, rank) in ran {
        if owner[&id].0 != rank {
            return Err(format!(
                "task {id} ran on rank {rank}, replay assigns it to rank {}",
                owner[&id]
            ));
        }
    }
    Ok(())
}
