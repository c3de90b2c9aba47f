use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::{
    AgentDump, ClockMode, ContentionModel, Experiment, MetricsRecord, RankTotals, RunOutput,
    SchedulerMode, SimError, SyntheticTask, TaskRun, WorkerProfile,
};
use crate::rma::{Fabric, FabricConfig, Latency, LatencyMode};
use crate::sched::{
    block_partition, init, run_scheduler_loop, run_static_list, Backoff, LoopError, LoopReport,
    SchedulerCounters, StealRecord, TaskExecutor, TaskId,
};

/// Wall-clock run settings shared by synthetic and real workloads.
#[derive(Debug, Clone, Copy)]
pub struct ThreadedOptions {
    pub mode: SchedulerMode,
    pub latency: Latency,
    pub backoff: Backoff,
    pub seed: u64,
    pub watchdog: Option<Duration>,
}

#[derive(Debug)]
pub struct ThreadedRun<X> {
    pub metrics: MetricsRecord,
    pub counters: Vec<SchedulerCounters>,
    pub reports: Vec<LoopReport>,
    /// The executors after the run, in rank order.
    pub executors: Vec<X>,
}

fn into_sim<X: std::error::Error>(rank: usize, e: LoopError<X>) -> SimError {
    match e {
        LoopError::Scheduler(s) => SimError::Scheduler(s),
        other => SimError::Task {
            rank,
            message: other.to_string(),
        },
    }
}

/// One OS thread per rank. Each rank gets its own executor from `make`.
pub fn run_threaded<X, F>(
    ranks: usize,
    tasks: &[TaskId],
    make: F,
    opts: ThreadedOptions,
) -> Result<ThreadedRun<X>, SimError>
where
    X: TaskExecutor + Send,
    F: Fn(usize) -> X,
{
    if ranks == 0 {
        return Err(SimError::Config("at least one rank is required".into()));
    }
    let mut execs: Vec<X> = (0..ranks).map(&make).collect();
    let abort = AtomicBool::new(false);
    let done = AtomicUsize::new(0);

    let (schedulers, lists) = match opts.mode {
        SchedulerMode::Ctws => {
            let mut cfg = FabricConfig::new(ranks);
            cfg.latency = Latency {
                mode: LatencyMode::Sleep,
                ..opts.latency
            };
            cfg.seed = opts.seed;
            (Some(init(&Fabric::new(cfg)?, tasks)?), None)
        }
        SchedulerMode::Static => {
            let lists: Vec<Vec<TaskId>> = block_partition(tasks.len(), ranks)
                .into_iter()
                .map(|r| tasks[r].to_vec())
                .collect();
            (None, Some(lists))
        }
    };
    let epoch = Instant::now();

    let mut watchdog_hit = None;
    type RankResult = (Result<LoopReport, SimError>, SchedulerCounters, Vec<StealRecord>);
    let results: Vec<RankResult> =
        std::thread::scope(|s| {
            let handles: Vec<_> = match (schedulers, &lists) {
                (Some(scheds), _) => scheds
                    .into_iter()
                    .zip(execs.iter_mut())
                    .enumerate()
                    .map(|(r, (mut sched, exec))| {
                        let (abort, done) = (&abort, &done);
                        s.spawn(move || {
                            let rep = run_scheduler_loop(&mut sched, exec, opts.backoff, epoch, abort)
                                .map_err(|e| into_sim(r, e));
                            done.fetch_add(1, Ordering::SeqCst);
                            (rep, sched.counters(), sched.take_steals())
                        })
                    })
                    .collect(),
                (None, Some(lists)) => lists
                    .iter()
                    .zip(execs.iter_mut())
                    .enumerate()
                    .map(|(r, (list, exec))| {
                        let done = &done;
                        s.spawn(move || {
                            let rep = run_static_list(list, exec, epoch).map_err(|e| into_sim(r, e));
                            done.fetch_add(1, Ordering::SeqCst);
                            (rep, SchedulerCounters::default(), Vec::new())
                        })
                    })
                    .collect(),
                (None, None) => unreachable!(),
            };
            while done.load(Ordering::SeqCst) < ranks {
                if let Some(limit) = opts.watchdog {
                    if watchdog_hit.is_none() && epoch.elapsed() > limit {
                        watchdog_hit = Some(epoch.elapsed());
                        abort.store(true, Ordering::SeqCst);
                    }
                }
                std::thread::sleep(Duration::from_millis(1));
            }
            handles
                .into_iter()
                .map(|h| h.join().expect("rank thread panicked"))
                .collect()
        });

    if let Some(at) = watchdog_hit {
        let agents = results
            .iter()
            .enumerate()
            .map(|(r, (rep, c, _))| AgentDump {
                rank: r,
                phase: match rep {
                    Ok(_) => "finished".into(),
                    Err(e) => e.to_string(),
                },
                tasks_done: rep.as_ref().map_or(c.local_dequeues as usize, |x| x.spans.len()),
                pending: None,
                holds_token: None,
                finish_seen: None,
            })
            .collect();
        return Err(SimError::Watchdog {
            at_ns: at.as_nanos() as u64,
            limit_ns: opts.watchdog.map_or(0, |d| d.as_nanos() as u64),
            agents,
        });
    }

    let mut reports = Vec::with_capacity(ranks);
    let mut counters = Vec::with_capacity(ranks);
    let mut steals = Vec::new();
    for (rep, c, s) in results {
        reports.push(rep?);
        counters.push(c);
        steals.extend(s);
    }
    let totals: Vec<RankTotals> = reports
        .iter()
        .map(|r| RankTotals {
            compute_ns: r.compute.as_nanos() as u64,
            scheduler_ns: r.scheduler.as_nanos() as u64,
            waiting_ns: r.waiting.as_nanos() as u64,
            finished_ns: r.finished_ns,
        })
        .collect();
    let runs = reports
        .iter()
        .enumerate()
        .flat_map(|(rank, rep)| {
            rep.spans.iter().map(move |s| TaskRun {
                rank,
                task: s.task,
                start_ns: s.start_ns,
                end_ns: s.end_ns,
            })
        })
        .collect();
    let token_hops = counters.iter().map(|c| c.token_hops).sum();
    let metrics = MetricsRecord::assemble(
        opts.mode,
        ClockMode::Wall,
        opts.seed,
        &totals,
        runs,
        steals,
        token_hops,
        None,
    );
    Ok(ThreadedRun {
        metrics,
        counters,
        reports,
        executors: execs,
    })
}

/// Sleeps through synthetic tasks, honouring the rank's profile and the
/// shared contention model.
#[derive(Debug)]
pub struct SyntheticExecutor {
    tasks: Arc<BTreeMap<TaskId, SyntheticTask>>,
    profile: WorkerProfile,
    contention: ContentionModel,
    active: Arc<AtomicUsize>,
    epoch: Instant,
}

#[derive(Debug, thiserror::Error)]
#[error("unknown task {0}")]
pub struct UnknownTask(TaskId);

impl SyntheticExecutor {
    pub fn new(
        tasks: Arc<BTreeMap<TaskId, SyntheticTask>>,
        profile: WorkerProfile,
        contention: ContentionModel,
        active: Arc<AtomicUsize>,
        epoch: Instant,
    ) -> Self {
        SyntheticExecutor {
            tasks,
            profile,
            contention,
            active,
            epoch,
        }
    }
}

impl TaskExecutor for SyntheticExecutor {
    type Error = UnknownTask;

    fn execute(&mut self, id: TaskId, hook: &mut dyn FnMut()) -> Result<(), UnknownTask> {
        let task = *self.tasks.get(&id).ok_or(UnknownTask(id))?;
        let users = self.active.fetch_add(1, Ordering::SeqCst) + 1;
        let mut users = users;
        for _ in 0..task.iterations {
            hook();
            let now = self.epoch.elapsed().as_nanos() as u64;
            let ns = self.profile.scaled(task.iteration_ns, now) + self.contention.delay_ns(users);
            std::thread::sleep(Duration::from_nanos(ns));
            users = self.active.load(Ordering::SeqCst);
        }
        self.active.fetch_sub(1, Ordering::SeqCst);
        Ok(())
    }
}

pub(super) fn run_synthetic(exp: &Experiment) -> Result<RunOutput, SimError> {
    let tasks = Arc::new(exp.workload.by_id()?);
    let profiles = exp.profiles()?;
    let active = Arc::new(AtomicUsize::new(0));
    let epoch = Instant::now();
    let opts = ThreadedOptions {
        mode: exp.mode,
        latency: exp.latency(LatencyMode::Sleep),
        backoff: exp.backoff,
        seed: exp.seed,
        watchdog: Some(Duration::from_nanos(exp.watchdog_ns())),
    };
    let run = run_threaded(
        exp.ranks,
        &exp.workload.ids(),
        |r| {
            SyntheticExecutor::new(
                tasks.clone(),
                profiles[r].clone(),
                exp.contention,
                active.clone(),
                epoch,
            )
        },
        opts,
    )?;
    Ok(RunOutput {
        metrics: run.metrics,
        counters: run.counters,
        events: Vec::new(),
        windows: None,
    })
}
