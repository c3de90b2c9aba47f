use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::sync::Arc;
use std::time::Duration;

use super::{
    AgentDump, ClockMode, Experiment, MetricsRecord, RankTotals, RunOutput, SchedulerMode,
    SimError, SyntheticTask, TaskRun, WorkerProfile,
};
use crate::rma::{Endpoint, Fabric, FabricConfig, LatencyMode};
use crate::sched::{block_partition, init, Poll, RankScheduler, TaskId};

#[derive(Debug, Clone, Copy)]
enum Phase {
    /// Needs a task; `sleep` is the current backoff (zero before the first
    /// unsuccessful poll).
    Idle { sleep: Duration },
    Running {
        task: SyntheticTask,
        next_iteration: u32,
        start_ns: u64,
    },
    Done,
}

struct Agent {
    phase: Phase,
    totals: RankTotals,
    tasks_done: usize,
}

enum Backend {
    Static(Vec<VecDeque<TaskId>>),
    Ctws {
        fabric: Arc<Fabric>,
        scheds: Vec<RankScheduler<Endpoint>>,
    },
}

struct Sim<'a> {
    exp: &'a Experiment,
    tasks: BTreeMap<TaskId, SyntheticTask>,
    profiles: Vec<WorkerProfile>,
    backend: Backend,
    agents: Vec<Agent>,
    running: usize,
    runs: Vec<TaskRun>,
}

fn ns(d: Duration) -> u64 {
    d.as_nanos() as u64
}

impl Sim<'_> {
    /// One scheduler poll and its virtual cost.
    fn poll(&mut self, r: usize) -> Result<(Poll, u64), SimError> {
        match &mut self.backend {
            Backend::Static(queues) => Ok((
                queues[r].pop_front().map_or(Poll::Finished, Poll::Task),
                0,
            )),
            Backend::Ctws { scheds, .. } => {
                let poll = scheds[r].try_get_task()?;
                Ok((poll, ns(scheds[r].endpoint().take_virtual_delay())))
            }
        }
    }

    fn hook(&mut self, r: usize) -> Result<u64, SimError> {
        match &mut self.backend {
            Backend::Static(_) => Ok(0),
            Backend::Ctws { scheds, .. } => {
                scheds[r].update_list()?;
                Ok(ns(scheds[r].endpoint().take_virtual_delay()))
            }
        }
    }

    /// Runs agent `r` from `now` until it has to wait; returns the time of
    /// its next event.
    fn advance(&mut self, r: usize, now: u64) -> Result<Option<u64>, SimError> {
        let mut t = now;
        loop {
            match self.agents[r].phase {
                Phase::Done => return Ok(None),
                Phase::Idle { sleep } => {
                    let (poll, cost) = self.poll(r)?;
                    match poll {
                        Poll::Task(id) => {
                            let task = *self.tasks.get(&id).ok_or_else(|| SimError::Task {
                                rank: r,
                                message: format!("scheduler returned unknown task {id}"),
                            })?;
                            t += cost;
                            self.agents[r].totals.scheduler_ns += cost;
                            self.agents[r].phase = Phase::Running {
                                task,
                                next_iteration: 0,
                                start_ns: t,
                            };
                            self.running += 1;
                        }
                        Poll::Wait => {
                            let sleep = self.exp.backoff.next(sleep);
                            self.agents[r].totals.waiting_ns += cost + ns(sleep);
                            self.agents[r].phase = Phase::Idle { sleep };
                            return Ok(Some(t + cost + ns(sleep)));
                        }
                        Poll::Finished => {
                            t += cost;
                            let a = &mut self.agents[r];
                            a.totals.scheduler_ns += cost;
                            a.totals.finished_ns = t;
                            a.phase = Phase::Done;
                            return Ok(None);
                        }
                    }
                }
                Phase::Running {
                    task,
                    next_iteration,
                    start_ns,
                } => {
                    if next_iteration == task.iterations {
                        self.runs.push(TaskRun {
                            rank: r,
                            task: task.id,
                            start_ns,
                            end_ns: t,
                        });
                        self.running -= 1;
                        let a = &mut self.agents[r];
                        a.tasks_done += 1;
                        a.phase = Phase::Idle {
                            sleep: Duration::ZERO,
                        };
                        continue;
                    }
                    let cost = self.hook(r)?;
                    t += cost;
                    let work = self.profiles[r].scaled(task.iteration_ns, t)
                        + self.exp.contention.delay_ns(self.running);
                    let a = &mut self.agents[r];
                    a.totals.scheduler_ns += cost;
                    a.totals.compute_ns += work;
                    a.phase = Phase::Running {
                        task,
                        next_iteration: next_iteration + 1,
                        start_ns,
                    };
                    return Ok(Some(t + work));
                }
            }
        }
    }

    fn dump(&self) -> Vec<AgentDump> {
        self.agents
            .iter()
            .enumerate()
            .map(|(r, a)| {
                let phase = match a.phase {
                    Phase::Idle { sleep } if sleep.is_zero() => "needs task".to_string(),
                    Phase::Idle { sleep } => format!("waiting for token (backoff {sleep:?})"),
                    Phase::Running {
                        task,
                        next_iteration,
                        ..
                    } => format!("running task {} iteration {next_iteration}", task.id),
                    Phase::Done => "finished".to_string(),
                };
                let (pending, holds_token, finish_seen) = match &self.backend {
                    Backend::Static(q) => (Some(q[r].len() as u64), None, None),
                    Backend::Ctws { scheds, .. } => (
                        scheds[r].pending().ok(),
                        scheds[r].holds_token().ok(),
                        Some(scheds[r].finish_seen()),
                    ),
                };
                AgentDump {
                    rank: r,
                    phase,
                    tasks_done: a.tasks_done,
                    pending,
                    holds_token,
                    finish_seen,
                }
            })
            .collect()
    }
}

pub(super) fn run(exp: &Experiment, record_events: bool) -> Result<RunOutput, SimError> {
    let ids = exp.workload.ids();
    let backend = match exp.mode {
        SchedulerMode::Static => Backend::Static(
            block_partition(ids.len(), exp.ranks)
                .into_iter()
                .map(|range| ids[range].iter().copied().collect())
                .collect(),
        ),
        SchedulerMode::Ctws => {
            let mut cfg = FabricConfig::new(exp.ranks);
            cfg.latency = exp.latency(LatencyMode::Virtual);
            cfg.seed = exp.seed;
            cfg.record_events = record_events;
            let fabric = Fabric::new(cfg)?;
            let scheds = init(&fabric, &ids)?;
            // Setup traffic is not part of the run.
            for s in &scheds {
                s.endpoint().take_virtual_delay();
            }
            Backend::Ctws { fabric, scheds }
        }
    };
    let limit_ns = exp.watchdog_ns();
    let mut sim = Sim {
        exp,
        tasks: exp.workload.by_id()?,
        profiles: exp.profiles()?,
        backend,
        agents: (0..exp.ranks)
            .map(|_| Agent {
                phase: Phase::Idle {
                    sleep: Duration::ZERO,
                },
                totals: RankTotals::default(),
                tasks_done: 0,
            })
            .collect(),
        running: 0,
        runs: Vec::with_capacity(ids.len()),
    };

    let mut queue = BinaryHeap::new();
    let mut seq = 0u64;
    for r in 0..exp.ranks {
        queue.push(Reverse((0u64, seq, r)));
        seq += 1;
    }
    while let Some(Reverse((now, _, r))) = queue.pop() {
        if now > limit_ns {
            return Err(SimError::Watchdog {
                at_ns: now,
                limit_ns,
                agents: sim.dump(),
            });
        }
        if let Some(next) = sim.advance(r, now)? {
            queue.push(Reverse((next, seq, r)));
            seq += 1;
        }
    }

    let (steals, counters, events, windows) = match &mut sim.backend {
        Backend::Static(_) => (Vec::new(), Vec::new(), Vec::new(), None),
        Backend::Ctws { fabric, scheds } => (
            scheds.iter_mut().flat_map(|s| s.take_steals()).collect(),
            scheds.iter().map(|s| s.counters()).collect::<Vec<_>>(),
            fabric.take_events(),
            scheds.first().map(|s| s.windows()),
        ),
    };
    let token_hops = counters.iter().map(|c| c.token_hops).sum();
    let totals: Vec<RankTotals> = sim.agents.iter().map(|a| a.totals).collect();
    let metrics = MetricsRecord::assemble(
        exp.mode,
        ClockMode::Virtual,
        exp.seed,
        &totals,
        sim.runs,
        steals,
        token_hops,
        None,
    );
    Ok(RunOutput {
        metrics,
        counters,
        events,
        windows,
    })
}
