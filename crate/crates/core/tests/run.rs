use peakctl_core::config::{parse_config, Application, RunConfig, RunKind};
use peakctl_core::run::{run, TRAJECTORY_HEADER};
use std::fs;
use std::path::Path;

fn quick(app: Application, kind: RunKind, dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::defaults(app);
    cfg.solver.n_steps = 200;
    cfg.solver.max_iterations = 400;
    cfg.run_kind = kind;
    cfg.output_dir = dir.to_path_buf();
    if kind == RunKind::SweepSigma {
        cfg.sweep_values = vec![0.0, 2.0];
    }
    cfg
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

/// Runs `cfg`, then reruns the configuration echoed in its summary and
/// compares every CSV byte for byte.
fn assert_round_trip(cfg: &RunConfig) {
    let first = run(cfg).unwrap();
    let echo = summary(&first.output_dir)["config"].to_string();
    let second_dir = tempfile::tempdir().unwrap();
    let mut again = parse_config(&echo).unwrap();
    again.output_dir = second_dir.path().to_path_buf();
    let second = run(&again).unwrap();
    let csvs: Vec<_> = first.files.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")).collect();
    assert!(!csvs.is_empty());
    for path in csvs {
        let name = path.file_name().unwrap();
        let a = fs::read(path).unwrap();
        let b = fs::read(second.output_dir.join(name)).unwrap();
        assert!(a == b, "{name:?} differs between runs");
    }
}

#[test]
fn inventory_solve_writes_full_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick(Application::Inventory, RunKind::Solve, dir.path());
    let out = run(&cfg).unwrap();
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    let mut header: Vec<&str> = TRAJECTORY_HEADER.to_vec();
    header.push("p");
    assert_eq!(lines.next().unwrap(), header.join(","));
    assert_eq!(lines.count(), cfg.solver.n_steps + 1);
    let s = summary(dir.path());
    assert_eq!(s["converged"].as_bool(), Some(out.converged));
    assert!(s.get("solver_constants").is_some());
    for key in ["objective", "report", "convergence", "maximality"] {
        assert!(s["solution"].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn inventory_solve_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    assert_round_trip(&quick(Application::Inventory, RunKind::Solve, dir.path()));
}

#[test]
fn queue_sweep_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    assert_round_trip(&quick(Application::Queue, RunKind::SweepSigma, dir.path()));
}
