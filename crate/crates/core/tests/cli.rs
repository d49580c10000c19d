use std::path::Path;
use std::process::{Command, Output};

use affine_formation::pipeline::{run_pipeline, RunOptions};
use affine_formation::scenario::Scenario;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_affine-formation"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn short_scenario(dir: &Path, extra_control: &str, extra_shape: &str) -> std::path::PathBuf {
    let text = format!(
        "name = \"short\"\n[shape]\npreset = \"paper8\"\n{extra_shape}\n[motion]\nrotation = [1.0]\nscaling = -0.2\n[control]\n{extra_control}\n[sim]\nt_end = 5.0\nperturbation = 0.3\njitter = 0.2\nseed = 9\ndecimate = 10\n"
    );
    let path = dir.join("short.scenario");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn presets_list_names_all_figures() {
    let o = run(&["presets", "list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["fig3", "fig4", "fig5", "fig6", "paper8", "paper8-printed"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = short_scenario(dir.path(), "", "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["run", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in ["trajectory.csv", "metrics.csv", "weights.csv", "motion.csv"] {
        let (x, y) = (std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file}");
    }
    let traj = std::fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,agent,x,y\n0,1,"));
    // 5 s at dt = 1e-3 stored every 10 steps: 501 samples of 8 agents
    assert_eq!(traj.lines().count(), 1 + 501 * 8);
    let metrics = std::fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("t,perp_residual,vel_error,centroid_x,centroid_y,scale\n"));
}

#[test]
fn flags_override_seed_and_decimation() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = short_scenario(dir.path(), "", "");
    let out = dir.path().join("o");
    let o = run(&["run", scenario.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "77", "--decimate", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("seed: 77"));
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 6 * 8);
}

#[test]
fn exported_weights_reproduce_the_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let computed = Scenario::parse(&std::fs::read_to_string(short_scenario(dir.path(), "", "")).unwrap(), None).unwrap();
    let first = run_pipeline(&computed, &RunOptions { out_dir: Some(dir.path().join("first")), ..Default::default() }).unwrap();
    assert!(!first.prepared.user_weights);

    let scenario = short_scenario(dir.path(), "", "weights = \"first/weights.csv\"");
    let reused = Scenario::load(scenario.to_str().unwrap()).unwrap();
    let second = run_pipeline(&reused, &RunOptions { dry_run: true, ..Default::default() }).unwrap();
    assert!(second.prepared.user_weights);
    assert!(second.prepared.stress_certificate.passed);
    assert_eq!(first.trajectory.times, second.trajectory.times);
    let dev = first
        .trajectory
        .states
        .iter()
        .zip(&second.trajectory.states)
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    assert!(dev < 1e-12, "deviation {dev:e}");
}

#[test]
fn half_gain_completes_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = short_scenario(dir.path(), "h_factor = 0.5", "");
    let out = dir.path().join("o");
    let o = run(&["run", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("uncertified gain"));
    assert!(stderr(&o).contains("uncertified gain"));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("uncertified gain"));
    assert!(summary.contains("margin: 0.500"));
    assert!(out.join("trajectory.csv").exists());
}

#[test]
fn parse_error_reports_line_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scenario");
    std::fs::write(&path, "[shape]\npreset = \"paper8\"\n[sim]\nt_end = [\n").unwrap();
    let o = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("scenario: parse error at line"), "{err}");
}

#[test]
fn missing_edges_are_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inline.scenario");
    std::fs::write(&path, "[shape]\npositions = [[0, 0], [1, 0], [0, 1]]\n[sim]\nt_end = 1.0\n").unwrap();
    let o = run(&["run", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("invalid field `edges`"), "{}", stderr(&o));
}

#[test]
fn printed_edge_list_is_rejected_with_module_tag() {
    let o = run(&["validate", "paper8-printed"]);
    assert_eq!(o.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("printed.scenario");
    std::fs::write(&path, "[shape]\npreset = \"paper8-printed\"\n[sim]\nt_end = 1.0\n").unwrap();
    let o = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: stress: no positive semidefinite stress"), "{}", stderr(&o));
}

#[test]
fn validate_prints_certificates() {
    let o = run(&["validate", "fig5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("stress certificate: PASS"));
    assert!(text.contains("margin: 2.000"));
    assert!(text.contains("gain: certified"));
}

#[test]
fn fig6_summary_reports_stopped_agents() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig6");
    let o = run(&["run", "fig6", "--out", out.to_str().unwrap(), "--decimate", "1000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    let speed = |agent: usize| -> f64 {
        let line = summary.lines().find(|l| l.trim_start().starts_with(&format!("agent {agent}:"))).unwrap();
        line.split(':').nth(1).unwrap().trim().parse().unwrap()
    };
    assert!(speed(4) < 1e-9 && speed(8) < 1e-9);
    for agent in [1, 2, 3, 5, 6, 7] {
        assert!((speed(agent) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn fig3_summary_scale_ratio() {
    let s = Scenario::load("fig3").unwrap();
    let report = run_pipeline(&s, &RunOptions { dry_run: true, decimate: Some(10_000), ..Default::default() }).unwrap();
    assert_eq!(report.exit_code(), 0);
    assert!(report.final_scale / report.initial_scale < 1e-3);
    assert!(report.summary().contains("seed: 3"));
}
