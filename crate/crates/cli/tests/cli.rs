use std::path::Path;
use std::process::{Command, Output};

use bisim_core::textio::{parse_mdp, parse_metric, parse_pairs, parse_policy, MetricStatus};
use bisim_core::mdp::policy_averaged_dynamics;

fn bisim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bisim"))
        .args(args)
        .output()
        .expect("bisim binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bisim(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn metric_value(dir: &Path, name: &str, i: usize, j: usize) -> f64 {
    parse_metric(&read(dir, name)).unwrap().metric.get(i, j)
}

#[test]
fn gen_is_deterministic_and_parses_back() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        ok(&["gen", "--seed", "7", "--out", path(d.path()), "states=3", "actions=2"]);
    }
    for f in ["mdp.txt", "policy.txt"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let mdp = parse_mdp(&read(a.path(), "mdp.txt")).unwrap();
    let policy = parse_policy(&read(a.path(), "policy.txt")).unwrap();
    assert_eq!((mdp.n_states(), mdp.n_actions()), (3, 2));
    let dynamics = policy_averaged_dynamics(&mdp, &policy).unwrap();
    for z in 0..3 {
        let total: f64 = dynamics.transition.row(z).iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn gen_duplicate_writes_bisimilar_pairs() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "--seed", "1", "--out", path(dir.path()), "states=3", "duplicate=0:2,2:3"]);
    let pairs = parse_pairs(&read(dir.path(), "pairs.txt")).unwrap();
    // state 0 -> {0, 1}, state 1 -> {2}, state 2 -> {3, 4, 5}
    assert_eq!(pairs.pairs, vec![(0, 1), (3, 4), (3, 5), (4, 5)]);
    let mdp = parse_mdp(&read(dir.path(), "mdp.txt")).unwrap();
    assert_eq!(mdp.n_states(), 6);
}

#[test]
fn solve_self_loop_gives_ten() {
    let dir = tempfile::tempdir().unwrap();
    for op in ["pi", "eps", "eps-bar"] {
        ok(&["solve", "--out", path(dir.path()), "mdp=self-loop", &format!("operator={op}")]);
        let file = parse_metric(&read(dir.path(), "metric.txt")).unwrap();
        assert_eq!(file.status, MetricStatus::Converged);
        // 1 / (1 - 0.9)
        assert!((file.metric.get(0, 1) - 10.0).abs() < 1e-8, "{op}");
    }
}

#[test]
fn solve_tolerances_agree_within_contraction_bound() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(&["solve", "--seed", "4", "--out", path(a.path()), "states=5", "--tol", "1e-10"]);
    ok(&["solve", "--seed", "4", "--out", path(b.path()), "states=5", "--tol", "1e-6"]);
    let x = parse_metric(&read(a.path(), "metric.txt")).unwrap().metric;
    let y = parse_metric(&read(b.path(), "metric.txt")).unwrap().metric;
    assert!(x.sup_distance(&y) <= 1e-5);
}

#[test]
fn solve_reports_ordering_against_pi() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "solve", "--seed", "9", "--out", path(dir.path()), "states=4", "actions=3", "policy=random", "operator=eps",
        "compare=pi",
    ]);
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), "solve.json")).unwrap();
    let gap = summary["compare"]["min_gap"].as_f64().unwrap();
    assert!(gap >= -1e-8, "{gap}");
}

#[test]
fn solve_failure_keeps_last_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let out = bisim(&["solve", "--out", path(dir.path()), "mdp=self-loop", "max_iter=3"]);
    assert_eq!(out.status.code(), Some(2));
    let file = parse_metric(&read(dir.path(), "metric.txt")).unwrap();
    assert_eq!(file.status, MetricStatus::Failed);
    assert_eq!(file.iterations, 3);
}

#[test]
fn estimate_csv_header_and_entangled_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["estimate", "--seed", "3", "--out", path(dir.path()), "states=4", "pairs=diagonal", "--samples", "500"]);
    let mut rdr = csv::Reader::from_path(dir.path().join("estimate.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header, ["method", "mode", "z", "z_prime", "n", "mean", "stderr", "exact", "bias", "seed"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(&r[1], "entangled");
        assert_eq!(r[5].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn estimate_dbc_diagonal_on_two_actions() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "estimate", "--out", path(dir.path()), "mdp=two-action", "method=dbc", "c=0", "pairs=diagonal", "--samples",
        "100000",
    ]);
    let mut rdr = csv::Reader::from_path(dir.path().join("estimate.csv")).unwrap();
    let row = rdr.records().next().unwrap().unwrap();
    assert_eq!(&row[1], "independent");
    // E|r_a - r_a'| with a, a' independent uniform on rewards {0, 1}
    assert!((row[5].parse::<f64>().unwrap() - 0.5).abs() <= 0.01);
}

#[test]
fn learn_self_loop_history_and_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["mdp=self-loop", "steps=5000", "batch_size=2", "samples=1"];
    for d in [&a, &b] {
        let mut full = vec!["learn", "--seed", "5", "--out", path(d.path())];
        full.extend(args);
        ok(&full);
    }
    let history = read(a.path(), "history.csv");
    assert_eq!(history, read(b.path(), "history.csv"));
    assert_eq!(history.lines().next(), Some("step,loss,sup_error"));
    assert_eq!(history.lines().count(), 5001);
    let file = parse_metric(&read(a.path(), "learned.txt")).unwrap();
    assert_eq!(file.status, MetricStatus::Learned);
    assert!((metric_value(a.path(), "learned.txt", 0, 1) - 10.0).abs() <= 0.05);
}

#[test]
fn learn_separable_writes_weights() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["learn", "--seed", "2", "--out", path(dir.path()), "model=separable", "steps=20"]);
    let text = read(dir.path(), "separable.txt");
    assert!(bisim_core::textio::parse_separable(&text).is_ok());
    assert_eq!(read(dir.path(), "history.csv").lines().count(), 21);
}

#[test]
fn corrupted_transport_fails_the_oracle_check() {
    let out = bisim(&["verify", "scale=0.02", "corrupt_transport=true"]);
    assert_eq!(out.status.code(), Some(3));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let first = stdout.lines().next().unwrap();
    assert!(first.starts_with("[FAIL]  1 transport oracle equivalence"), "{first}");
}

#[test]
fn exit_codes() {
    assert_eq!(bisim(&["solve", "bogus=1"]).status.code(), Some(1));
    assert_eq!(bisim(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bisim(&["solve", "c=1.5"]).status.code(), Some(1));
    assert_eq!(bisim(&["solve", "mdp=/nonexistent/mdp.txt"]).status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("blocker");
    std::fs::write(&file, "").unwrap();
    // output directory under a regular file cannot be created
    let out = file.join("sub");
    assert_eq!(bisim(&["gen", "--out", path(&out)]).status.code(), Some(4));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "mdp = self-loop\noperator = pi\ntol = 1e-3\n").unwrap();
    ok(&["solve", "--config", path(&cfg), "--tol", "1e-12", "--out", path(dir.path())]);
    let file = parse_metric(&read(dir.path(), "metric.txt")).unwrap();
    assert!(file.residual <= 1e-12);
}
