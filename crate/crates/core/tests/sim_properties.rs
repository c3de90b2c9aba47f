use std::collections::BTreeSet;
use std::time::Duration;

use ctws_core::sched::write_steal_log;
use ctws_core::sim::{
    check_accounting, check_single_token, check_steal_half, check_steal_replay, idle_metrics,
    metrics_json, overhead_fraction, presets, run_experiment, run_experiment_traced,
    steal_statistics, ClockMode, Experiment, SchedulerMode, SkewModel, Workload,
};
use proptest::prelude::*;

fn steal_log_bytes(exp: &Experiment) -> (String, Vec<u8>) {
    let m = run_experiment(exp).unwrap();
    let mut log = Vec::new();
    write_steal_log(&mut log, &m.steals).unwrap();
    (metrics_json(&m), log)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_runs_execute_each_task_once(seed in any::<u64>()) {
        let exp = presets::randomized(seed);
        let out = run_experiment_traced(&exp, true).unwrap();
        let m = &out.metrics;
        let ids = exp.workload.ids();
        let ran: Vec<_> = m.runs.iter().map(|r| r.task).collect();
        let unique: BTreeSet<_> = ran.iter().copied().collect();
        prop_assert_eq!(ran.len(), ids.len());
        prop_assert_eq!(unique, ids.iter().copied().collect::<BTreeSet<_>>());
        prop_assert!(out.counters.iter().all(|c| c.get_task_calls > 0));
        check_steal_half(&m.steals).map_err(TestCaseError::fail)?;
        check_steal_replay(m, &ids).map_err(TestCaseError::fail)?;
        check_accounting(m).map_err(TestCaseError::fail)?;
        check_single_token(&out.events, &out.windows.unwrap()).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn homogeneous_static_barely_idles() {
    let m = run_experiment(&presets::balanced(4, SchedulerMode::Static, 0)).unwrap();
    assert_eq!(m.tasks, 40);
    let (avg, max) = idle_metrics(&m);
    assert!(avg <= 3.0 && max <= 3.0, "{avg} {max}");
}

#[test]
fn balanced_preset_never_steals() {
    let m = run_experiment(&presets::balanced(4, SchedulerMode::Ctws, 0)).unwrap();
    assert_eq!(steal_statistics(&m), (0, 0));
}

#[test]
fn two_workers_one_twice_as_slow() {
    let mut e = Experiment::new(
        2,
        SchedulerMode::Static,
        Workload::uniform(20, 10, Duration::from_millis(10)),
    );
    e.skew = SkewModel::Fixed {
        multipliers: vec![1.0, 2.0],
    };
    let s = run_experiment(&e).unwrap();
    let fast = s.per_rank[0].idle_ns as f64 / s.makespan_ns as f64;
    assert!((fast - 0.5).abs() < 1e-12, "{fast}");

    e.mode = SchedulerMode::Ctws;
    let c = run_experiment(&e).unwrap();
    assert!(idle_metrics(&c).0 < idle_metrics(&s).0);
    // Work split 2:1 by speed: 20 tasks of 100 ms finish near 1.33 s.
    let ideal = 20.0 * 0.1 / 1.5;
    let got = c.makespan_ns as f64 / 1e9;
    assert!(got >= ideal && got < ideal + 0.2, "{got}");
}

#[test]
fn identical_seeds_give_identical_bytes() {
    for exp in [
        presets::skewed(16, SchedulerMode::Ctws, 3),
        presets::randomized(77),
    ] {
        assert_eq!(steal_log_bytes(&exp), steal_log_bytes(&exp));
    }
    let a = steal_log_bytes(&presets::skewed(16, SchedulerMode::Ctws, 3));
    let b = steal_log_bytes(&presets::skewed(16, SchedulerMode::Ctws, 4));
    assert_ne!(a, b);
}

#[test]
fn single_rank_needs_no_scheduler() {
    let m = run_experiment(&presets::balanced(1, SchedulerMode::Ctws, 0)).unwrap();
    assert_eq!(steal_statistics(&m), (0, 0));
    assert_eq!(m.token_hops, 0);
    assert_eq!(idle_metrics(&m), (0.0, 0.0));
}

#[test]
fn overhead_is_zero_for_static_and_small_for_ctws() {
    let s = run_experiment(&presets::skewed(8, SchedulerMode::Static, 1)).unwrap();
    assert_eq!(overhead_fraction(&s), 0.0);
    let c = run_experiment(&presets::skewed(8, SchedulerMode::Ctws, 1)).unwrap();
    let f = overhead_fraction(&c);
    assert!(f > 0.0 && f < 0.02, "{f}");
}

#[test]
fn wall_clock_zero_latency_overhead() {
    let mut e = Experiment::new(
        2,
        SchedulerMode::Ctws,
        Workload::uniform(8, 10, Duration::from_millis(10)),
    );
    e.clock = ClockMode::Wall;
    let m = run_experiment(&e).unwrap();
    let f = overhead_fraction(&m);
    assert!(f <= 0.005, "{f}");
    check_steal_replay(&m, &e.workload.ids()).unwrap();
}

#[test]
fn ctws_beats_static_on_the_skewed_preset() {
    let s = run_experiment(&presets::skewed(32, SchedulerMode::Static, 1)).unwrap();
    let c = run_experiment(&presets::skewed(32, SchedulerMode::Ctws, 1)).unwrap();
    assert!(c.makespan_ns < s.makespan_ns);
    assert!(idle_metrics(&c).0 < idle_metrics(&s).0);
    let (attempts, failed) = steal_statistics(&c);
    assert!(attempts > 0 && failed * 10 < attempts);
}
