//! Named experiment setups echoing the production runs: ten shots per node,
//! node counts from 4 to 64.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ContentionModel, Experiment, SchedulerMode, SkewModel, SyntheticTask, Workload};
use crate::sched::TaskId;

pub const SWEEP_RANKS: [usize; 5] = [4, 8, 16, 32, 64];
pub const TASKS_PER_RANK: usize = 10;
pub const ITERATIONS: u32 = 1000;
pub const ITERATION: Duration = Duration::from_millis(10);

/// Spread of per-shot runtimes seen on the production cluster (1.5 h to
/// 9.3 h).
pub const SKEW_LO: f64 = 1.0;
pub const SKEW_HI: f64 = 6.2;

fn workload(ranks: usize) -> Workload {
    Workload::uniform(ranks * TASKS_PER_RANK, ITERATIONS, ITERATION)
}

/// Identical tasks, identical ranks, free transport.
pub fn balanced(ranks: usize, mode: SchedulerMode, seed: u64) -> Experiment {
    let mut e = Experiment::new(ranks, mode, workload(ranks));
    e.seed = seed;
    e
}

/// Identical tasks on ranks whose speed drifts: every rank redraws a
/// log-uniform slowdown in `[SKEW_LO, SKEW_HI]` every two nominal task
/// lengths. Adds a little transport latency and shared-service contention.
pub fn skewed(ranks: usize, mode: SchedulerMode, seed: u64) -> Experiment {
    let mut e = balanced(ranks, mode, seed);
    e.skew = SkewModel::LogUniform {
        lo: SKEW_LO,
        hi: SKEW_HI,
        segment_ns: 2 * ITERATION.as_nanos() as u64 * u64::from(ITERATIONS),
    };
    e.contention = ContentionModel {
        capacity: 16,
        access_ns: 100_000,
    };
    e.latency_fixed = Duration::from_micros(50);
    e.latency_jitter = Duration::from_micros(20);
    e
}

/// A random CTWS run drawn from `seed`: 1 to 16 ranks, up to 256 tasks of
/// uneven length, drifting slowdowns, transport latency and contention.
pub fn randomized(seed: u64) -> Experiment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranks = rng.random_range(1..=16);
    let tasks = (0..rng.random_range(0..=256u64))
        .map(|i| SyntheticTask {
            id: TaskId(i),
            iterations: rng.random_range(1..=8),
            iteration_ns: rng.random_range(100_000..=5_000_000),
        })
        .collect();
    let mut e = Experiment::new(ranks, SchedulerMode::Ctws, Workload { tasks });
    e.seed = seed;
    e.skew = SkewModel::LogUniform {
        lo: 1.0,
        hi: rng.random_range(1.0..=SKEW_HI),
        segment_ns: rng.random_range(1_000_000..=50_000_000),
    };
    e.contention = ContentionModel {
        capacity: rng.random_range(1..=16),
        access_ns: rng.random_range(0..=50_000),
    };
    e.latency_fixed = Duration::from_nanos(rng.random_range(0..=100_000));
    e.latency_jitter = Duration::from_nanos(rng.random_range(0..=50_000));
    e
}
