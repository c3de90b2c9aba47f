use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rma::OneSided;

use super::{Poll, RankScheduler, SchedError, TaskId};

/// Busy-wait policy of an idle rank waiting for the token: poll, sleep
/// `initial`, doubling up to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Backoff {
    pub initial: Duration,
    pub max: Duration,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff {
            initial: Duration::from_millis(1),
            max: Duration::from_millis(16),
        }
    }
}

impl Backoff {
    pub fn next(&self, current: Duration) -> Duration {
        (current * 2).min(self.max).max(self.initial)
    }
}

/// Runs one task. Must call `hook` exactly once before each iteration.
pub trait TaskExecutor {
    type Error: std::error::Error + Send + Sync + 'static;

    fn execute(&mut self, task: TaskId, hook: &mut dyn FnMut()) -> Result<(), Self::Error>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpan {
    pub task: TaskId,
    /// Nanoseconds since the run epoch.
    pub start_ns: u64,
    pub end_ns: u64,
}

/// What one rank did during a wall-clock run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoopReport {
    pub spans: Vec<TaskSpan>,
    pub compute: Duration,
    /// Time inside scheduler calls that made progress.
    pub scheduler: Duration,
    /// Time spent waiting for the token.
    pub waiting: Duration,
    pub hook_calls: u64,
    pub finished_ns: u64,
}

#[derive(Debug, Error)]
pub enum LoopError<X: std::error::Error + 'static> {
    #[error("scheduler failure: {0}")]
    Scheduler(#[from] SchedError),
    #[error("task {task} failed: {source}")]
    Task {
        task: TaskId,
        #[source]
        source: X,
    },
    #[error("aborted by watchdog")]
    Aborted,
}

fn since(epoch: Instant) -> u64 {
    epoch.elapsed().as_nanos() as u64
}

/// Wall-clock task loop: get a task, run its iterations with `update_list`
/// as the per-iteration hook, repeat until the scheduler reports Finished.
pub fn run_scheduler_loop<E, X>(
    sched: &mut RankScheduler<E>,
    exec: &mut X,
    backoff: Backoff,
    epoch: Instant,
    abort: &AtomicBool,
) -> Result<LoopReport, LoopError<X::Error>>
where
    E: OneSided,
    X: TaskExecutor,
{
    let mut report = LoopReport::default();
    let mut sleep = Duration::ZERO;
    loop {
        let t0 = Instant::now();
        let poll = sched.try_get_task()?;
        let spent = t0.elapsed();
        let task = match poll {
            Poll::Finished => {
                report.scheduler += spent;
                break;
            }
            Poll::Wait => {
                if abort.load(Ordering::Relaxed) {
                    return Err(LoopError::Aborted);
                }
                sleep = backoff.next(sleep);
                std::thread::sleep(sleep);
                report.waiting += t0.elapsed();
                continue;
            }
            Poll::Task(task) => task,
        };
        report.scheduler += spent;
        sleep = Duration::ZERO;

        let start_ns = since(epoch);
        let started = Instant::now();
        let mut in_hook = Duration::ZERO;
        let mut hook_calls = 0;
        let mut hook_err = None;
        let mut hook = || {
            let h = Instant::now();
            hook_calls += 1;
            if hook_err.is_none() {
                if let Err(e) = sched.update_list() {
                    hook_err = Some(e);
                }
            }
            in_hook += h.elapsed();
        };
        let result = exec.execute(task, &mut hook);
        let elapsed = started.elapsed();
        if let Some(e) = hook_err {
            return Err(e.into());
        }
        result.map_err(|source| LoopError::Task { task, source })?;
        report.hook_calls += hook_calls;
        report.scheduler += in_hook;
        report.compute += elapsed.saturating_sub(in_hook);
        report.spans.push(TaskSpan {
            task,
            start_ns,
            end_ns: since(epoch),
        });
    }
    report.finished_ns = since(epoch);
    Ok(report)
}

/// Static-distribution counterpart: runs a fixed list with a no-op hook.
pub fn run_static_list<X: TaskExecutor>(
    tasks: &[TaskId],
    exec: &mut X,
    epoch: Instant,
) -> Result<LoopReport, LoopError<X::Error>> {
    let mut report = LoopReport::default();
    for &task in tasks {
        let start_ns = since(epoch);
        let started = Instant::now();
        let mut calls = 0;
        exec.execute(task, &mut || calls += 1)
            .map_err(|source| LoopError::Task { task, source })?;
        report.compute += started.elapsed();
        report.hook_calls += calls;
        report.spans.push(TaskSpan {
            task,
            start_ns,
            end_ns: since(epoch),
        });
    }
    report.finished_ns = since(epoch);
    Ok(report)
}
