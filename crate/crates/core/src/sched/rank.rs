use std::collections::BTreeSet;
use std::sync::Arc;

use crate::rma::{Endpoint, Fabric, OneSided, Rank, RmaError, Slot, WindowId};

use super::{
    block_partition, select_victim, steal_amount, LoadVector, Poll, SchedError, StealRecord,
    TaskId, TokenValue,
};

// Token window: [state, attempt counter]. Windows start zeroed, so an empty
// slot must be 0 and the token value is stored shifted by one.
const TOKEN_LEN: usize = 2;
const SLOT_EMPTY: Slot = 0;
const SLOT_OPEN: Slot = 1;
const SLOT_FINISH: Slot = 2;

// Queue window: [remaining count, head index, ids...].
const QUEUE_COUNT: usize = 0;
const QUEUE_IDS: usize = 2;

/// The three windows every rank exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CtwsWindows {
    pub token: WindowId,
    /// Incoming copy of the predecessor's load vector.
    pub load: WindowId,
    pub queue: WindowId,
    pub capacity: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SchedulerCounters {
    pub update_calls: u64,
    pub get_task_calls: u64,
    pub token_receipts: u64,
    pub token_hops: u64,
    pub steal_attempts: u64,
    pub failed_steals: u64,
    pub local_dequeues: u64,
}

/// Per-rank scheduler state. Everything another rank needs lives in the
/// windows; the rest is private to the owning agent.
#[derive(Debug)]
pub struct RankScheduler<E: OneSided> {
    ep: E,
    windows: CtwsWindows,
    load: LoadVector,
    holding: bool,
    attempts: u64,
    finish_seen: bool,
    counters: SchedulerCounters,
    steals: Vec<StealRecord>,
}

fn slot_of(id: TaskId) -> Result<Slot, SchedError> {
    Slot::try_from(id.0).map_err(|_| SchedError::TaskIdOverflow(id))
}

fn count_of(rank: Rank, slot: Slot) -> Result<u64, SchedError> {
    u64::try_from(slot).map_err(|_| SchedError::CorruptWindow {
        rank,
        detail: format!("negative count {slot}"),
    })
}

/// Creates the scheduler windows collectively, block-partitions `tasks`
/// across ranks and hands the open token to rank 0.
///
/// An empty task list yields schedulers that report `Finished` immediately.
pub fn init(
    fabric: &Arc<Fabric>,
    tasks: &[TaskId],
) -> Result<Vec<RankScheduler<Endpoint>>, SchedError> {
    let mut seen = BTreeSet::new();
    for &id in tasks {
        slot_of(id)?;
        if !seen.insert(id) {
            return Err(SchedError::DuplicateTask(id));
        }
    }
    let ranks = fabric.ranks();
    let windows = CtwsWindows {
        token: fabric.create_window_uniform(TOKEN_LEN)?,
        load: fabric.create_window_uniform(ranks)?,
        queue: fabric.create_window_uniform(QUEUE_IDS + tasks.len())?,
        capacity: tasks.len(),
    };
    let parts = block_partition(tasks.len(), ranks);
    let initial = LoadVector::new(parts.iter().map(|p| p.len() as u64).collect());

    let mut out = Vec::with_capacity(ranks);
    for (ep, part) in fabric.endpoints().into_iter().zip(parts) {
        let me = ep.rank();
        let mut queue = vec![part.len() as Slot, 0];
        for &id in &tasks[part] {
            queue.push(slot_of(id)?);
        }
        let t = ep.lock_exclusive(me, windows.queue)?;
        ep.put(me, windows.queue, 0, &queue)?;
        ep.unlock(&t)?;
        if me.0 == 0 && !tasks.is_empty() {
            let list: Vec<Slot> = initial.counts().iter().map(|&c| c as Slot).collect();
            let t = ep.lock_exclusive(me, windows.load)?;
            ep.put(me, windows.load, 0, &list)?;
            ep.unlock(&t)?;
            let t = ep.lock_exclusive(me, windows.token)?;
            ep.put(me, windows.token, 0, &[SLOT_OPEN, 0])?;
            ep.unlock(&t)?;
        }
        out.push(RankScheduler {
            ep,
            windows,
            load: initial.clone(),
            holding: false,
            attempts: 0,
            finish_seen: tasks.is_empty(),
            counters: SchedulerCounters::default(),
            steals: Vec::new(),
        });
    }
    Ok(out)
}

impl<E: OneSided> RankScheduler<E> {
    pub fn rank(&self) -> Rank {
        self.ep.rank()
    }

    pub fn endpoint(&self) -> &E {
        &self.ep
    }

    pub fn windows(&self) -> CtwsWindows {
        self.windows
    }

    pub fn load(&self) -> &LoadVector {
        &self.load
    }

    pub fn counters(&self) -> SchedulerCounters {
        self.counters
    }

    /// Steal attempts this rank made as a thief.
    pub fn steals(&self) -> &[StealRecord] {
        &self.steals
    }

    pub fn take_steals(&mut self) -> Vec<StealRecord> {
        std::mem::take(&mut self.steals)
    }

    pub fn finish_seen(&self) -> bool {
        self.finish_seen
    }

    /// Whether the token currently sits in this rank's slot. Reads the
    /// window; does not accept the token.
    pub fn holds_token(&self) -> Result<bool, SchedError> {
        let state = self.locked(self.rank(), self.windows.token, |ep, me, win| {
            Ok(ep.get(me, win, 0, 1)?[0])
        })?;
        Ok(state != SLOT_EMPTY)
    }

    /// Exact pending count in this rank's own queue.
    pub fn pending(&self) -> Result<u64, SchedError> {
        let me = self.rank();
        let count = self.locked(me, self.windows.queue, |ep, me, win| {
            Ok(ep.get(me, win, QUEUE_COUNT, 1)?[0])
        })?;
        count_of(me, count)
    }

    /// Called once per task iteration. A no-op unless the token is here; the
    /// holder refreshes its own entry and passes list and token on. A finish
    /// token is relayed untouched.
    pub fn update_list(&mut self) -> Result<(), SchedError> {
        self.counters.update_calls += 1;
        let Some(value) = self.check_token()? else {
            return Ok(());
        };
        match value {
            TokenValue::Finish => {
                self.finish_seen = true;
                self.forward(TokenValue::Finish)
            }
            TokenValue::Open => {
                let me = self.rank();
                let pending = self.pending()?;
                self.load.set(me, pending);
                self.forward(TokenValue::Open)
            }
        }
    }

    /// Next task for this rank: the head of its own queue, else a steal when
    /// holding an open token.
    pub fn try_get_task(&mut self) -> Result<Poll, SchedError> {
        self.counters.get_task_calls += 1;
        if let Some(id) = self.dequeue_local()? {
            self.counters.local_dequeues += 1;
            return Ok(Poll::Task(id));
        }
        if self.finish_seen {
            return Ok(Poll::Finished);
        }
        match self.check_token()? {
            None => Ok(Poll::Wait),
            Some(TokenValue::Finish) => {
                self.finish_seen = true;
                self.forward(TokenValue::Finish)?;
                Ok(Poll::Finished)
            }
            Some(TokenValue::Open) => self.steal_or_finish(),
        }
    }

    fn steal_or_finish(&mut self) -> Result<Poll, SchedError> {
        let me = self.rank();
        self.load.set(me, 0);
        while let Some(victim) = select_victim(&self.load, me) {
            let record = self.steal(victim)?;
            let remaining = record.observed_remaining;
            let stolen = record.stolen.clone();
            self.steals.push(record);
            if stolen.is_empty() {
                self.load.set(victim, 0);
                continue;
            }
            self.load.set(victim, remaining - stolen.len() as u64);
            self.load.set(me, stolen.len() as u64 - 1);
            self.store_stolen(&stolen)?;
            return Ok(Poll::Task(stolen[0]));
        }
        self.finish_seen = true;
        self.forward(TokenValue::Finish)?;
        Ok(Poll::Finished)
    }

    /// Takes the front half (rounded up) of the victim's pending queue under
    /// an exclusive lock on it.
    pub fn steal(&mut self, victim: Rank) -> Result<StealRecord, SchedError> {
        let me = self.rank();
        self.attempts += 1;
        self.counters.steal_attempts += 1;
        let (remaining, stolen) = self.locked(victim, self.windows.queue, |ep, victim, win| {
            let header = ep.get(victim, win, QUEUE_COUNT, 2)?;
            let remaining = count_of(victim, header[0])?;
            let head = count_of(victim, header[1])? as usize;
            if remaining == 0 {
                return Ok((0, Vec::new()));
            }
            let take = steal_amount(remaining);
            let ids = ep.get(victim, win, QUEUE_IDS + head, take as usize)?;
            ep.put(
                victim,
                win,
                QUEUE_COUNT,
                &[(remaining - take) as Slot, (head as u64 + take) as Slot],
            )?;
            let ids = ids
                .into_iter()
                .map(|s| count_of(victim, s).map(TaskId))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((remaining, ids))
        })?;
        if stolen.is_empty() {
            self.counters.failed_steals += 1;
        }
        Ok(StealRecord {
            attempt: self.attempts,
            thief: me,
            victim,
            stolen,
            observed_remaining: remaining,
        })
    }

    /// Writes stolen ids into the (empty) own queue, head already consumed.
    fn store_stolen(&mut self, stolen: &[TaskId]) -> Result<(), SchedError> {
        let me = self.rank();
        let ids = stolen
            .iter()
            .map(|&id| slot_of(id))
            .collect::<Result<Vec<_>, _>>()?;
        self.locked(me, self.windows.queue, |ep, me, win| {
            let count = ep.get(me, win, QUEUE_COUNT, 1)?[0];
            if count != 0 {
                return Err(SchedError::CorruptWindow {
                    rank: me,
                    detail: format!("thief queue not empty ({count})"),
                });
            }
            ep.put(me, win, QUEUE_IDS, &ids)?;
            ep.put(me, win, QUEUE_COUNT, &[ids.len() as Slot - 1, 1])?;
            Ok(())
        })
    }

    fn dequeue_local(&mut self) -> Result<Option<TaskId>, SchedError> {
        self.locked(self.rank(), self.windows.queue, |ep, me, win| {
            let header = ep.get(me, win, QUEUE_COUNT, 2)?;
            let count = count_of(me, header[0])?;
            if count == 0 {
                return Ok(None);
            }
            let head = count_of(me, header[1])? as usize;
            let id = ep.get(me, win, QUEUE_IDS + head, 1)?[0];
            ep.put(me, win, QUEUE_COUNT, &[count as Slot - 1, head as Slot + 1])?;
            Ok(Some(TaskId(count_of(me, id)?)))
        })
    }

    /// Reads the own token slot; on first sight of a newly arrived token,
    /// adopts the load vector and attempt counter that came with it.
    fn check_token(&mut self) -> Result<Option<TokenValue>, SchedError> {
        let me = self.rank();
        let slots = self.locked(me, self.windows.token, |ep, me, win| {
            Ok(ep.get(me, win, 0, TOKEN_LEN)?)
        })?;
        let value = match slots[0] {
            SLOT_EMPTY => return Ok(None),
            SLOT_OPEN => TokenValue::Open,
            SLOT_FINISH => TokenValue::Finish,
            other => {
                return Err(SchedError::CorruptWindow {
                    rank: me,
                    detail: format!("token slot holds {other}"),
                })
            }
        };
        if !self.holding {
            self.holding = true;
            self.counters.token_receipts += 1;
            self.attempts = count_of(me, slots[1])?;
            let ranks = self.ep.ranks();
            let incoming = self.locked(me, self.windows.load, |ep, me, win| {
                Ok(ep.get(me, win, 0, ranks)?)
            })?;
            let counts = incoming
                .into_iter()
                .map(|s| count_of(me, s))
                .collect::<Result<Vec<_>, _>>()?;
            self.load = LoadVector::new(counts);
        }
        Ok(Some(value))
    }

    /// Moves list and token to the successor: lock successor's token slot,
    /// then own, write the list, clear own slot, fill successor's slot.
    fn forward(&mut self, value: TokenValue) -> Result<(), SchedError> {
        let me = self.rank();
        let ranks = self.ep.ranks();
        if ranks == 1 {
            return Ok(());
        }
        let succ = me.next(ranks);
        let win = self.windows;
        let list: Vec<Slot> = self.load.counts().iter().map(|&c| c as Slot).collect();
        let state = match value {
            TokenValue::Open => SLOT_OPEN,
            TokenValue::Finish => SLOT_FINISH,
        };
        let attempts = self.attempts as Slot;
        self.locked(succ, win.token, |ep, succ, token_win| {
            if ep.get(succ, token_win, 0, 1)?[0] != SLOT_EMPTY {
                return Err(SchedError::TokenSlotOccupied(succ));
            }
            let own = ep.lock_exclusive(me, token_win)?;
            let result = (|| -> Result<(), SchedError> {
                let t = ep.lock_exclusive(succ, win.load)?;
                let put = ep.put(succ, win.load, 0, &list);
                ep.unlock(&t)?;
                put?;
                ep.put(me, token_win, 0, &[SLOT_EMPTY, 0])?;
                ep.put(succ, token_win, 0, &[state, attempts])?;
                Ok(())
            })();
            ep.unlock(&own)?;
            result
        })?;
        self.holding = false;
        self.counters.token_hops += 1;
        Ok(())
    }

    /// Runs `f` inside an exclusive epoch on `(window, target)`; the lock is
    /// released even when `f` fails.
    fn locked<R>(
        &self,
        target: Rank,
        window: WindowId,
        f: impl FnOnce(&E, Rank, WindowId) -> Result<R, SchedError>,
    ) -> Result<R, SchedError> {
        let token = self.ep.lock_exclusive(target, window)?;
        let result = f(&self.ep, target, window);
        let released: Result<(), RmaError> = self.ep.unlock(&token);
        let value = result?;
        released?;
        Ok(value)
    }
}
