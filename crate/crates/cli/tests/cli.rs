use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const FAST: [&str; 6] = ["--iterations", "20", "--iteration-ms", "1", "--skew-segment-ms", "40"];

fn ctws(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctws"))
        .args(args)
        .env("CTWS_OUTPUT_ROOT", root)
        .current_dir(root)
        .output()
        .expect("spawn ctws")
}

fn with_fast<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(FAST).collect()
}

fn entries(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn smoke_run_writes_all_artifacts() {
    let root = tempfile::tempdir().unwrap();
    let out = ctws(
        &["run", "--workload", "synthetic", "--sched", "ctws", "-P", "8", "--tasks", "80", "--seed", "1"],
        root.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = root.path().join("synthetic-ctws-p8-seed1");
    assert_eq!(
        entries(&dir),
        ["manifest.json", "metrics.csv", "metrics.json", "steals.csv", "timeline.csv"]
    );
    let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 8);
}

#[test]
fn unknown_flag_is_a_usage_error_with_no_output() {
    let root = tempfile::tempdir().unwrap();
    let out = ctws(&["run", "--frobnicate", "3"], root.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(entries(root.path()).is_empty());
}

#[test]
fn invalid_config_values_are_usage_errors() {
    let root = tempfile::tempdir().unwrap();
    let out = ctws(&["run", "-P", "0"], root.path());
    assert_eq!(out.status.code(), Some(2));

    let cfg = root.path().join("bad.json");
    fs::write(&cfg, r#"{"ranks": 4, "colour": "blue"}"#).unwrap();
    let out = ctws(&["run", "--config", cfg.to_str().unwrap()], root.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(entries(root.path()), ["bad.json"]);
}

#[test]
fn existing_output_directory_is_refused() {
    let root = tempfile::tempdir().unwrap();
    let args = with_fast(&["run", "-o", "taken"]);
    assert!(ctws(&args, root.path()).status.success());
    let out = ctws(&args, root.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rerun_from_manifest_reproduces_metrics() {
    let root = tempfile::tempdir().unwrap();
    let first = ctws(&with_fast(&["run", "-P", "6", "--tasks", "30", "--seed", "9", "-o", "a"]), root.path());
    assert!(first.status.success());
    let manifest = root.path().join("a/manifest.json");
    let again = ctws(&["run", "--config", manifest.to_str().unwrap(), "-o", "b"], root.path());
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    for f in ["metrics.csv", "metrics.json", "steals.csv", "timeline.csv"] {
        assert_eq!(
            fs::read(root.path().join("a").join(f)).unwrap(),
            fs::read(root.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn json_config_is_overridden_by_flags() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("c.json");
    fs::write(&cfg, r#"{"ranks": 3, "tasks": 12, "iterations": 5, "iteration_ms": 1.0, "sched": "static"}"#).unwrap();
    let out = ctws(&["run", "--config", cfg.to_str().unwrap(), "-P", "2", "-o", "r"], root.path());
    assert!(out.status.success());
    let metrics = fs::read_to_string(root.path().join("r/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 2);
}

#[test]
fn paper_sweep_writes_one_row_per_rank_count() {
    let root = tempfile::tempdir().unwrap();
    let out = ctws(&with_fast(&["run", "--paper-sweep", "-o", "sweep"]), root.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = root.path().join("sweep");
    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for p in [4, 8, 16, 32, 64] {
        assert!(dir.join(format!("p{p}")).join("metrics.json").is_file());
    }
}

#[test]
fn compare_reports_both_runs() {
    let root = tempfile::tempdir().unwrap();
    for (sched, name) in [("static", "s"), ("ctws", "c")] {
        let out = ctws(&with_fast(&["run", "--sched", sched, "-P", "8", "--tasks", "80", "-o", name]), root.path());
        assert!(out.status.success());
    }
    let out = ctws(&["compare", "s", "c"], root.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("makespan_s") && text.contains("max_idle_pct"), "{text}");

    let out = ctws(&["compare", "s", "missing"], root.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_kernel_passes() {
    let root = tempfile::tempdir().unwrap();
    let out = ctws(&["validate-kernel"], root.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn small_migration_run_writes_an_image() {
    let root = tempfile::tempdir().unwrap();
    let out = ctws(
        &[
            "run", "--workload", "rtm", "-P", "2", "--tasks", "2", "--grid", "61", "--nt", "400",
            "-o", "img",
        ],
        root.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = root.path().join("img");
    let raw = fs::metadata(dir.join("image.raw")).unwrap().len();
    assert_eq!(raw, 61 * 61 * 4);
    assert!(dir.join("metrics.json").is_file());
}
