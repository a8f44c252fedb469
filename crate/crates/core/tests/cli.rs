use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poincare-lab"))
        .args(args)
        .envs(envs.iter().copied())
        .output()
        .expect("binary runs")
}

fn read_json(path: &std::path::Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn certificate_envelope_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cert.json");
    let o = run(
        &["certificate", "--k", "4", "--N", "1", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(0));
    let summary = String::from_utf8(o.stdout).unwrap();
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.contains("verified=false"));
    let env = read_json(&out);
    assert_eq!(env["status"], "ok");
    assert_eq!(env["result"]["witness"], serde_json::json!([-1, 0, 0, -1]));
    assert_eq!(env["config"]["command"], "certificate");
    assert_eq!(env["config"]["params"]["k"], 4);
    assert!(env["wall_time"].is_null() && env["determinism_seed"].is_null());
}

#[test]
fn stdout_without_out_flag() {
    let o = run(&["gamma-ball", "--N", "2", "--radius", "3"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let env: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(env["result"]["count"], 10);
}

#[test]
fn timing_is_opt_in() {
    let o = run(&["lp-norm", "--k", "4", "--p", "1", "--timing"], &[]);
    let env: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(env["wall_time"].as_f64().unwrap() >= 0.0);
    assert!((env["result"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-10);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["certificate", "--k", "4"][..],
        &["sweep", "--k", "5..4", "--N", "1..2"],
        &["lp-norm", "--k", "4", "--p", "1", "--tol", "-1"],
        &["no-such-command"],
        &["quotient-norm", "--N", "2", "--probe", "1,2,3"],
    ] {
        let o = run(args, &[]);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty());
    }
    let o = run(
        &["gamma-ball", "--N", "2", "--radius", "3"],
        &[("POINCARE_LAB_CAP", "lots")],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn computation_errors_exit_1_with_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("err.json");
    let o = run(
        &["lp-norm", "--k", "2", "--p", "1", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    let env = read_json(&out);
    assert_eq!(env["status"], "error");
    assert_eq!(env["error"]["kind"], "divergent");

    let o = run(
        &[
            "gamma-ball",
            "--N",
            "1",
            "--radius",
            "50",
            "--out",
            out.to_str().unwrap(),
        ],
        &[("POINCARE_LAB_CAP", "1000")],
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(read_json(&out)["error"]["kind"], "capacity");
}

#[test]
fn sweep_csv_rows_in_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(
        &[
            "sweep",
            "--k",
            "4..4",
            "--N",
            "1..3",
            "--radius",
            "16",
            "--format",
            "csv",
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(&r[0], "4");
        assert_eq!(r[1].parse::<usize>().unwrap(), i + 1);
        assert_eq!(&r[2], "false");
    }
}

#[test]
fn sweep_truncates_on_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    // k = 2 is not integrable, so the first cell fails
    let o = run(
        &[
            "sweep",
            "--k",
            "2..4",
            "--N",
            "6",
            "--radius",
            "16",
            "--format",
            "csv",
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().last().unwrap().starts_with("# truncated:"));
}
