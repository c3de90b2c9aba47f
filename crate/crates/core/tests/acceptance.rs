//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use ctws_core::rtm::{run_rtm, RtmCluster, RtmConfig, RtmOutput};
use ctws_core::sched::write_steal_log;
use ctws_core::sim::{
    check_single_token, check_steal_half, idle_metrics, metrics_json, overhead_fraction, presets,
    run_experiment, run_experiment_traced, steal_statistics, write_metrics_csv, ClockMode,
    Experiment, MetricsRecord, SchedulerMode, SimError, SkewModel, Workload,
};
use ctws_core::wave::validate::{run_kernel_checks, stencil_exactness};

/// Seeds averaged for the skewed-preset criteria.
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(exp: &Experiment) -> MetricsRecord {
    run_experiment(exp).unwrap_or_else(|e| panic!("experiment failed: {e}"))
}

fn skewed_pair(p: usize, seed: u64) -> (MetricsRecord, MetricsRecord) {
    (
        run(&presets::skewed(p, SchedulerMode::Static, seed)),
        run(&presets::skewed(p, SchedulerMode::Ctws, seed)),
    )
}

fn criterion_1_2() -> (Outcome, Outcome) {
    let start = Instant::now();
    let (mut bad_once, mut bad_finish, mut trips, mut bad_token) = (0, 0, 0, 0);
    let (mut steals, mut successes, mut bad_half) = (0usize, 0usize, Vec::new());
    for seed in 0..1000u64 {
        let exp = presets::randomized(seed);
        let out = match run_experiment_traced(&exp, true) {
            Ok(out) => out,
            Err(SimError::Watchdog { .. }) => {
                trips += 1;
                continue;
            }
            Err(e) => panic!("run {seed}: {e}"),
        };
        let m = &out.metrics;
        let ran: Vec<_> = m.runs.iter().map(|r| r.task).collect();
        let unique: BTreeSet<_> = ran.iter().copied().collect();
        if ran.len() != exp.workload.tasks.len() || unique.len() != ran.len() {
            bad_once += 1;
        }
        // Every rank drained its queue and returned Finished.
        if out.counters.iter().any(|c| c.get_task_calls == 0) {
            bad_finish += 1;
        }
        if let Some(w) = &out.windows {
            if check_single_token(&out.events, w).is_err() {
                bad_token += 1;
            }
        }
        steals += m.steals.len();
        successes += m.steals.iter().filter(|s| !s.stolen.is_empty()).count();
        if let Err(e) = check_steal_half(&m.steals) {
            bad_half.push(format!("seed {seed}: {e}"));
        }
    }
    let elapsed = start.elapsed();
    let c1 = outcome(
        bad_once == 0 && bad_finish == 0 && trips == 0 && bad_token == 0 && elapsed <= Duration::from_secs(120),
        format!(
            "1000 runs in {:.1} s: {bad_once} exactly-once violations, {bad_finish} unfinished, {trips} watchdog trips, {bad_token} token duplications",
            elapsed.as_secs_f64()
        ),
    );
    let c2 = outcome(
        bad_half.is_empty() && successes > 0,
        format!(
            "{successes} successful of {steals} steals checked, {} violations{}",
            bad_half.len(),
            bad_half.first().map(|e| format!(" (first: {e})")).unwrap_or_default()
        ),
    );
    (c1, c2)
}

fn criterion_3() -> Outcome {
    let (mut attempts, mut failed) = (0, 0);
    for seed in SEEDS {
        let (a, f) = steal_statistics(&run(&presets::skewed(64, SchedulerMode::Ctws, seed)));
        attempts += a;
        failed += f;
    }
    let rate = 1.0 - failed as f64 / attempts.max(1) as f64;
    let balanced = steal_statistics(&run(&presets::balanced(4, SchedulerMode::Ctws, 1)));
    outcome(
        attempts > 0 && rate >= 0.90 && balanced == (0, 0),
        format!(
            "P=64 skewed: {:.1}% of {attempts} attempts succeeded ({:.1} per run); P=4 balanced: {} attempts",
            100.0 * rate,
            attempts as f64 / SEEDS.len() as f64,
            balanced.0
        ),
    )
}

fn criterion_4() -> Outcome {
    let (mut s, mut c) = (0.0, 0.0);
    for seed in SEEDS {
        let (st, ct) = skewed_pair(16, seed);
        s += idle_metrics(&st).0;
        c += idle_metrics(&ct).0;
    }
    let n = SEEDS.len() as f64;
    let (s, c) = (s / n, c / n);
    let ratio = c / s;
    outcome(
        ratio <= 0.5,
        format!(
            "P=16 skewed average idle: static {s:.1}%, ctws {c:.1}% (ratio {ratio:.2}, reduction {:.0}%)",
            100.0 * (1.0 - ratio)
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [16, 32, 64] {
        let mut gains = Vec::new();
        for seed in SEEDS {
            let (st, ct) = skewed_pair(p, seed);
            gains.push(1.0 - ct.makespan_ns as f64 / st.makespan_ns as f64);
        }
        let mean = gains.iter().sum::<f64>() / gains.len() as f64;
        let worst = gains.iter().copied().fold(f64::INFINITY, f64::min);
        pass &= worst >= 0.0 && mean >= 0.05;
        parts.push(format!("P={p} {:.1}% (worst seed {:.1}%)", 100.0 * mean, 100.0 * worst));
    }
    let mut worst_balanced: f64 = 0.0;
    for p in presets::SWEEP_RANKS {
        let s = run(&presets::balanced(p, SchedulerMode::Static, 1));
        let c = run(&presets::balanced(p, SchedulerMode::Ctws, 1));
        worst_balanced = worst_balanced.max(c.makespan_ns as f64 / s.makespan_ns as f64 - 1.0);
    }
    pass &= worst_balanced <= 0.05;
    outcome(
        pass,
        format!(
            "skewed makespan reduction {}; homogeneous ctws vs static at most {:+.2}%",
            parts.join(", "),
            100.0 * worst_balanced
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut e = Experiment::new(
        4,
        SchedulerMode::Ctws,
        Workload::uniform(16, 20, Duration::from_millis(10)),
    );
    e.clock = ClockMode::Wall;
    e.skew = SkewModel::Fixed {
        multipliers: vec![1.0, 1.5, 2.0, 3.0],
    };
    e.latency_fixed = Duration::from_micros(50);
    e.latency_jitter = Duration::from_micros(20);
    let m = run(&e);
    let f = overhead_fraction(&m);
    outcome(
        f <= 0.02,
        format!(
            "wall clock, P=4, 10 ms iterations, 50+20 us remote latency: overhead {:.3}% with {} steals",
            100.0 * f,
            m.steals.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let report = run_kernel_checks().expect("kernel checks run");
    let elapsed = start.elapsed();
    let exact = stencil_exactness(8, 9).expect("stencil check");
    let slope = report.convergence.slope;
    outcome(
        exact <= 1e-9 && (slope - 2.0).abs() <= 0.3 && elapsed <= Duration::from_secs(30),
        format!(
            "8th-order relative error {exact:.1e} on degree <= 9, convergence slope {slope:.3}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn peak_depth(out: &RtmOutput, i2: usize) -> usize {
    let col = out.image.column(i2, 0);
    (0..col.len())
        .max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()))
        .unwrap()
}

fn criterion_8_9() -> (Outcome, Outcome) {
    let cfg = RtmConfig::two_layer_desk();
    let interface = match cfg.model {
        ctws_core::rtm::ModelSpec::TwoLayer { interface, .. } => interface,
        _ => unreachable!(),
    };
    let layered = run_rtm(&cfg, &RtmCluster::new(2, SchedulerMode::Static)).expect("static rtm");
    let flat = run_rtm(&RtmConfig::homogeneous_desk(), &RtmCluster::new(2, SchedulerMode::Static))
        .expect("homogeneous rtm");
    // Columns well inside the lateral extent, away from the absorbing pad.
    let columns = [50, 75, 100, 125, 150];
    let peaks: Vec<usize> = columns.iter().map(|&i2| peak_depth(&layered, i2)).collect();
    let energy = flat.image.energy() / layered.image.energy();
    let c8 = outcome(
        peaks.iter().all(|z| z.abs_diff(interface) <= 2) && energy <= 1e-3,
        format!(
            "201x201 two-layer: profile peaks at depths {peaks:?} (interface {interface}); homogeneous relative energy {energy:.1e}"
        ),
    );
    let ctws = run_rtm(&cfg, &RtmCluster::new(2, SchedulerMode::Ctws)).expect("ctws rtm");
    let diff = layered.image.relative_difference(&ctws.image).expect("same grid");
    let c9 = outcome(
        diff <= 1e-6 && ctws.shots_imaged == cfg.shots && layered.shots_imaged == cfg.shots,
        format!(
            "static vs ctws image relative difference {diff:.1e} over {} shots",
            cfg.shots
        ),
    );
    (c8, c9)
}

fn artifacts(exp: &Experiment) -> Vec<u8> {
    let m = run(exp);
    let mut bytes = metrics_json(&m).into_bytes();
    write_metrics_csv(&mut bytes, &m).unwrap();
    write_steal_log(&mut bytes, &m.steals).unwrap();
    bytes
}

fn criterion_10() -> Outcome {
    let exp = presets::skewed(16, SchedulerMode::Ctws, 7);
    let (a, b) = (artifacts(&exp), artifacts(&exp));
    let r = presets::randomized(4242);
    let same = a == b && artifacts(&r) == artifacts(&r);
    outcome(
        same,
        format!("two runs each of two configs: {} bytes, identical = {same}", a.len()),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let (c1, c2) = criterion_1_2();
    results.push((1, "exactly-once and termination", c1));
    results.push((2, "steal-half law", c2));
    results.push((3, "steal success rate", criterion_3()));
    results.push((4, "idle-time reduction", criterion_4()));
    results.push((5, "makespan", criterion_5()));
    results.push((6, "scheduler overhead", criterion_6()));
    results.push((7, "FDM correctness", criterion_7()));
    let (c8, c9) = criterion_8_9();
    results.push((8, "imaging correctness", c8));
    results.push((9, "physics/scheduling independence", c9));
    results.push((10, "determinism", criterion_10()));

    let mut failed = 0;
    for (n, name, o) in &results {
        println!("{} {n:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
