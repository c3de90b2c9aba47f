//! Cyclic token-based work stealing.
//!
//! A single token circulates around the ring of ranks. Each time the holder
//! finishes a task iteration it refreshes its own entry in the traveling
//! [`LoadVector`] and hands both to its successor. Only the holder may steal,
//! which removes any chance of two thieves locking each other's queues. When
//! the holder finds nothing left to steal it flips the token to finish and
//! the token's next lap terminates everyone.

mod driver;
mod rank;
mod steal_log;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rma::{Rank, RmaError};

pub use driver::{
    run_scheduler_loop, run_static_list, Backoff, LoopError, LoopReport, TaskExecutor, TaskSpan,
};
pub use rank::{init, CtwsWindows, RankScheduler, SchedulerCounters};
pub use steal_log::{read_steal_log, write_steal_log, STEAL_LOG_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskId(pub u64);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A unit of work as seen by a driver: the scheduler moves ids, the workload
/// knows how many iterations each one has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskHandle {
    pub id: TaskId,
    pub iterations: u32,
}

/// Value carried by the circulating token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenValue {
    /// Work may still be available somewhere (`0`).
    Open,
    /// Nothing is left to steal (`1`). Never reverts.
    Finish,
}

impl TokenValue {
    pub fn as_flag(self) -> u8 {
        match self {
            TokenValue::Open => 0,
            TokenValue::Finish => 1,
        }
    }
}

/// Approximate remaining-task count for every rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadVector(Vec<u64>);

impl LoadVector {
    pub fn new(counts: Vec<u64>) -> Self {
        LoadVector(counts)
    }

    pub fn zeros(ranks: usize) -> Self {
        LoadVector(vec![0; ranks])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, rank: Rank) -> u64 {
        self.0[rank.0]
    }

    pub fn set(&mut self, rank: Rank, count: u64) {
        self.0[rank.0] = count;
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// Rank with the most remaining tasks other than `me`; lowest rank wins ties.
/// `None` when every other entry is zero.
pub fn select_victim(load: &LoadVector, me: Rank) -> Option<Rank> {
    let mut best: Option<(usize, u64)> = None;
    for (rank, &count) in load.counts().iter().enumerate() {
        if rank == me.0 || count == 0 {
            continue;
        }
        if best.map_or(true, |(_, c)| count > c) {
            best = Some((rank, count));
        }
    }
    best.map(|(rank, _)| Rank(rank))
}

/// Number of tasks taken from a victim holding `remaining`.
pub fn steal_amount(remaining: u64) -> u64 {
    remaining.div_ceil(2)
}

/// Contiguous near-equal blocks; the first `n % ranks` ranks get one extra.
pub fn block_partition(n: usize, ranks: usize) -> Vec<Range<usize>> {
    assert!(ranks > 0, "partition needs at least one rank");
    let base = n / ranks;
    let extra = n % ranks;
    let mut start = 0;
    (0..ranks)
        .map(|r| {
            let len = base + usize::from(r < extra);
            let range = start..start + len;
            start += len;
            range
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StealOutcome {
    Success,
    Failed,
}

/// One steal attempt. `attempt` is a global 1-based sequence number; it
/// travels with the token so attempts from different thieves stay ordered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StealRecord {
    pub attempt: u64,
    pub thief: Rank,
    pub victim: Rank,
    pub stolen: Vec<TaskId>,
    /// Victim's remaining count as read under the steal lock.
    pub observed_remaining: u64,
}

impl StealRecord {
    pub fn outcome(&self) -> StealOutcome {
        if self.stolen.is_empty() {
            StealOutcome::Failed
        } else {
            StealOutcome::Success
        }
    }
}

/// Result of asking the scheduler for the next task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Poll {
    Task(TaskId),
    /// Own queue empty and the token is elsewhere; busy-wait and retry.
    Wait,
    Finished,
}

#[derive(Debug, Error)]
pub enum SchedError {
    #[error(transparent)]
    Transport(#[from] RmaError),
    #[error("duplicate task id {0}")]
    DuplicateTask(TaskId),
    #[error("task id {0} does not fit a window slot")]
    TaskIdOverflow(TaskId),
    #[error("token slot at rank {0} already occupied when forwarding")]
    TokenSlotOccupied(Rank),
    #[error("corrupt scheduler window at rank {rank}: {detail}")]
    CorruptWindow { rank: Rank, detail: String },
}
