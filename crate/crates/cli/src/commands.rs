use std::fs;
use std::path::Path;

use ctws_core::rtm::run_rtm;
use ctws_core::sched::write_steal_log;
use ctws_core::sim::{
    metrics_json, presets, run_experiment, write_metrics_csv, write_summary_csv,
    write_timeline_csv, MetricsRecord, MetricsReport, MetricsSummary,
};
use ctws_core::wave::validate::run_kernel_checks;
use serde::{Deserialize, Serialize};

use crate::args::RunArgs;
use crate::config::{ExperimentConfig, WorkloadKind};
use crate::output::{resolve_output, Staging};
use crate::{runtime, CliError};

pub const ARTIFACTS: [&str; 5] = [
    "metrics.csv",
    "metrics.json",
    "steals.csv",
    "timeline.csv",
    "manifest.json",
];

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    paper_sweep: bool,
    config: ExperimentConfig,
    artifacts: Vec<String>,
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| CliError::Usage(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
    if value.get("tool").is_some() && value.get("config").is_some() {
        let m: Manifest = serde_json::from_value(value).map_err(bad)?;
        // The old output directory is taken; a rerun names its own.
        return Ok(ExperimentConfig {
            output: None,
            ..m.config
        });
    }
    serde_json::from_value(value).map_err(bad)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(runtime("encoding csv"))?;
    Ok(buf)
}

/// Runs one configuration and writes its artifacts under `prefix` in the
/// staging directory.
fn execute(cfg: &ExperimentConfig, staging: &Staging, prefix: &str) -> Result<MetricsRecord, CliError> {
    let metrics = match cfg.workload {
        WorkloadKind::Synthetic => run_experiment(&cfg.experiment()).map_err(runtime("experiment failed"))?,
        WorkloadKind::Rtm => {
            let out = run_rtm(&cfg.rtm_config()?, &cfg.cluster()).map_err(runtime("migration failed"))?;
            let dir = staging.path().join(prefix);
            fs::create_dir_all(&dir).map_err(runtime("creating image directory"))?;
            out.image
                .write_raw(&dir.join("image.raw"))
                .map_err(runtime("writing image"))?;
            out.metrics
        }
    };
    let file = |name: &str| format!("{prefix}{name}");
    staging.write(&file("metrics.csv"), &csv_bytes(|b| write_metrics_csv(b, &metrics))?)?;
    staging.write(&file("metrics.json"), metrics_json(&metrics).as_bytes())?;
    staging.write(&file("steals.csv"), &csv_bytes(|b| write_steal_log(b, &metrics.steals))?)?;
    staging.write(&file("timeline.csv"), &csv_bytes(|b| write_timeline_csv(b, &metrics))?)?;
    Ok(metrics)
}

fn write_manifest(staging: &Staging, cfg: &ExperimentConfig, sweep: bool, artifacts: Vec<String>) -> Result<(), CliError> {
    let m = Manifest {
        tool: "ctws".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        paper_sweep: sweep,
        config: cfg.clone(),
        artifacts,
    };
    let json = serde_json::to_string_pretty(&m).map_err(runtime("encoding manifest"))?;
    staging.write("manifest.json", json.as_bytes())
}

fn print_summary(s: &MetricsSummary) {
    println!(
        "{} P={} tasks={}: makespan {:.3} s, idle avg {:.2}% max {:.2}%, steals {} ({} failed), overhead {:.4}%",
        s.mode,
        s.ranks,
        s.tasks,
        s.makespan_s,
        s.avg_idle_pct,
        s.max_idle_pct,
        s.steal_attempts,
        s.failed_steals,
        100.0 * s.overhead_fraction
    );
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    args.apply(&mut cfg);
    cfg.validate()?;

    if args.paper_sweep {
        let dest = resolve_output(&cfg, &format!("sweep-{}-seed{}", cfg.sched, cfg.seed));
        let staging = Staging::new(&dest)?;
        let mut rows = Vec::new();
        let mut artifacts = vec!["summary.csv".to_string(), "manifest.json".to_string()];
        for p in presets::SWEEP_RANKS {
            let c = ExperimentConfig {
                ranks: p,
                tasks: p * presets::TASKS_PER_RANK,
                ..cfg.clone()
            };
            c.validate()?;
            let prefix = format!("p{p}/");
            let m = execute(&c, &staging, &prefix)?;
            print_summary(&m.summary());
            rows.push(m.summary());
            artifacts.extend(ARTIFACTS[..4].iter().map(|a| format!("{prefix}{a}")));
        }
        staging.write("summary.csv", &csv_bytes(|b| write_summary_csv(b, &rows))?)?;
        write_manifest(&staging, &cfg, true, artifacts)?;
        println!("wrote {}", staging.commit()?.display());
        return Ok(());
    }

    let dest = resolve_output(&cfg, &cfg.default_name());
    let staging = Staging::new(&dest)?;
    let m = execute(&cfg, &staging, "")?;
    let mut artifacts: Vec<String> = ARTIFACTS.iter().map(|s| s.to_string()).collect();
    if cfg.workload == WorkloadKind::Rtm {
        artifacts.extend(["image.raw".to_string(), "image.raw.hdr".to_string()]);
    }
    write_manifest(&staging, &cfg, false, artifacts)?;
    print_summary(&m.summary());
    println!("wrote {}", staging.commit()?.display());
    Ok(())
}

fn read_report(dir: &Path) -> Result<MetricsReport, CliError> {
    let path = dir.join("metrics.json");
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Runtime(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn relative(a: f64, b: f64) -> String {
    if a == 0.0 {
        if b == 0.0 { "0.0%".into() } else { "n/a".into() }
    } else {
        format!("{:+.1}%", 100.0 * (b - a) / a)
    }
}

pub fn compare(a: &Path, b: &Path) -> Result<(), CliError> {
    let (ra, rb) = (read_report(a)?, read_report(b)?);
    let (sa, sb) = (&ra.summary, &rb.summary);
    println!("A: {} ({} P={})", a.display(), sa.mode, sa.ranks);
    println!("B: {} ({} P={})", b.display(), sb.mode, sb.ranks);
    println!("{:<16} {:>14} {:>14} {:>10}", "metric", "A", "B", "B vs A");
    let rows = [
        ("makespan_s", sa.makespan_s, sb.makespan_s),
        ("avg_idle_pct", sa.avg_idle_pct, sb.avg_idle_pct),
        ("max_idle_pct", sa.max_idle_pct, sb.max_idle_pct),
    ];
    for (name, x, y) in rows {
        println!("{name:<16} {x:>14.4} {y:>14.4} {:>10}", relative(x, y));
    }
    for (name, x, y) in [
        ("steal_attempts", sa.steal_attempts, sb.steal_attempts),
        ("failed_steals", sa.failed_steals, sb.failed_steals),
        ("token_hops", sa.token_hops, sb.token_hops),
    ] {
        println!("{name:<16} {x:>14} {y:>14} {:>+10}", y as i64 - x as i64);
    }
    Ok(())
}

pub fn validate_kernel() -> Result<(), CliError> {
    let r = run_kernel_checks().map_err(runtime("kernel checks"))?;
    let verdict = |ok: bool| if ok { "ok" } else { "FAILED" };
    println!(
        "stencil exactness (order 8, degree <= 9): max relative error {:.2e} {}",
        r.stencil_max_error,
        verdict(r.stencil_ok)
    );
    let errs: Vec<String> = r.convergence.errors.iter().map(|e| format!("{e:.2e}")).collect();
    println!(
        "temporal convergence: slope {:.3} (errors {}) {}",
        r.convergence.slope,
        errs.join(", "),
        verdict(r.convergence_ok)
    );
    println!(
        "taper reflection: {:.2e} of incident energy {}",
        r.reflection_ratio,
        verdict(r.reflection_ok)
    );
    if r.passed() {
        Ok(())
    } else {
        Err(CliError::Runtime("kernel checks failed".into()))
    }
}
