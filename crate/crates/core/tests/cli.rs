//! End-to-end checks of the `plurality` binary.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plurality"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn classify_exit_codes() {
    let o = run(&["classify", "3maj", "--k", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["in_m3"], true);

    let o = run(&["classify", "median", "--k", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["uniform"], false);
    assert_eq!(
        v["uniform_counterexample"]["colors"],
        serde_json::json!([0, 1, 2])
    );
}

#[test]
fn rule_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.rule");
    std::fs::write(&bad, "k=3\n0 0 1 -> 2\n").unwrap();
    let o = run(&["classify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    // Unlisted triples default to 3-majority with first-input ties.
    let plain = dir.path().join("plain.rule");
    std::fs::write(&plain, "k=3\n").unwrap();
    assert_eq!(
        run(&["classify", plain.to_str().unwrap()]).status.code(),
        Some(0)
    );

    let skewed = dir.path().join("skewed.rule");
    std::fs::write(&skewed, "# second input wins once\nk=3\n0 1 2 -> 1\n").unwrap();
    let o = run(&["classify", skewed.to_str().unwrap(), "--k", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["clear_majority"], true);
    assert_eq!(v["uniform_counterexample"]["deltas"]["delta_g"], 3);
}

#[test]
fn expected_table() {
    let o = run(&["expected", "--counts", "2,1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for needle in ["0.740741", "0.259259", "2.222222", "0.777778"] {
        assert!(text.contains(needle), "{needle} missing from {text}");
    }
    let o = run(&["expected", "--counts", "3,1", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["bias"]["alpha"], 0.125);
    assert_eq!(v["bias"]["gamma"], 0.0);
    let o = run(&["expected", "--counts", "5,5", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["bias"]["s"], 0);
    assert_eq!(run(&["expected", "--counts", "0,0"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["simulate", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(
        run(&["simulate", "--engine", "warp"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["simulate", "--adversary", "steal:3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["bias-decrease", "--n", "100", "--k", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn simulate_writes_identical_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &std::path::Path, threads: &str| {
        vec![
            "simulate".to_string(),
            "--n=10000".into(),
            "--k=2".into(),
            "--s=500".into(),
            "--trials=1".into(),
            "--seed=5".into(),
            format!("--threads={threads}"),
            format!("--out={}", p.display()),
            "--plot".into(),
        ]
    };
    let run_owned = |v: Vec<String>| {
        Command::new(env!("CARGO_BIN_EXE_plurality"))
            .args(&v)
            .output()
            .unwrap()
    };
    let o = run_owned(args(&a, "1"));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(run_owned(args(&b, "8")).status.code(), Some(0));
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].ends_with(",0,true,true"), "{}", rows[1]);
    assert!(dir.path().join("a.csv.plot.py").is_file());
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["experiment"], "simulate");
    assert_eq!(summary["points"][0]["majority_rate"], 1.0);
}

#[test]
fn median_failure_command() {
    let o = run(&["median-failure", "--n", "3000", "--trials", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["params"]["initial"], serde_json::json!([900, 1020, 1080]));
}

#[test]
fn monochromatic_start_converges_immediately() {
    let o = run(&["simulate", "--counts", "0,50,0", "--trials", "3"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["points"][0]["median_rounds"], 0.0);
    assert_eq!(v["points"][0]["majority_rate"], 1.0);
}

#[test]
fn chain_command() {
    let o = run(&["chain", "--n", "2", "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.contains("[1,1] time=2.000000000 absorb=[0.500000000,0.500000000]"),
        "{text}"
    );
    let o = run(&["chain", "--n", "2", "--k", "2", "--dump"]);
    assert_eq!(stdout(&o).lines().count(), 3);
}
