use std::collections::BTreeMap;

use crate::rma::{Event, EventKind, Rank};
use crate::sched::{steal_amount, CtwsWindows, StealRecord};

use super::MetricsRecord;

/// Replays token-window writes from the transport log and checks that at
/// no point more than one rank holds a non-empty token slot.
pub fn check_single_token(events: &[Event], windows: &CtwsWindows) -> Result<(), String> {
    let mut slots: BTreeMap<Rank, i64> = BTreeMap::new();
    for e in events {
        if e.window != windows.token {
            continue;
        }
        if let EventKind::Put { offset: 0, values } = &e.kind {
            if let Some(&v) = values.first() {
                slots.insert(e.target, v);
            }
            let held: Vec<Rank> = slots.iter().filter(|(_, &v)| v != 0).map(|(&r, _)| r).collect();
            if held.len() > 1 {
                return Err(format!("after event {} the token is at ranks {held:?}", e.seq));
            }
        }
    }
    Ok(())
}

/// Every successful steal took the front half, rounded up, of what the
/// victim had under the lock.
pub fn check_steal_half(steals: &[StealRecord]) -> Result<(), String> {
    for s in steals {
        let expected = steal_amount(s.observed_remaining);
        if s.stolen.len() as u64 != expected {
            return Err(format!(
                "attempt {}: took {} of {} (expected {expected})",
                s.attempt,
                s.stolen.len(),
                s.observed_remaining
            ));
        }
    }
    Ok(())
}

/// Per rank: compute + scheduler + idle = makespan, task spans fit inside
/// busy time, and idle covers the time spent waiting for the token.
pub fn check_accounting(record: &MetricsRecord) -> Result<(), String> {
    for r in &record.per_rank {
        if r.busy_ns + r.idle_ns != record.makespan_ns || r.compute_ns + r.scheduler_ns != r.busy_ns {
            return Err(format!("rank {}: busy and idle do not add up to the makespan", r.rank));
        }
        let spans: u64 = record
            .runs
            .iter()
            .filter(|t| t.rank == r.rank)
            .map(|t| t.end_ns - t.start_ns)
            .sum();
        if spans < r.compute_ns || spans > r.busy_ns {
            return Err(format!(
                "rank {}: task spans {spans} ns outside [{}, {}]",
                r.rank, r.compute_ns, r.busy_ns
            ));
        }
        if r.waiting_ns > r.idle_ns {
            return Err(format!("rank {}: waited longer than it idled", r.rank));
        }
    }
    Ok(())
}
