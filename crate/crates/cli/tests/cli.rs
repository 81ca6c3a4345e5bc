use std::fs;
use std::process::{Command, Output};

fn migrad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_migrad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn rho_star_and_sum_capacity() {
    let o = migrad(&["rho-star", "--power", "1"]);
    assert!(o.status.success());
    let r: f64 = stdout(&o).trim().parse().unwrap();
    assert!((r - 0.311).abs() < 1e-3);

    let o = migrad(&["sum-capacity", "--power", "1"]);
    let c: f64 = stdout(&o).trim().parse().unwrap();
    assert!((c - 0.6435).abs() < 1e-4);
}

#[test]
fn invalid_power_exits_two() {
    let o = migrad(&["rho-star", "--power", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("power"));
    assert_eq!(
        migrad(&["sweep", "--mode", "sk", "--points", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(migrad(&["figure", "5"]).status.code(), Some(2));
}

#[test]
fn unwritable_path_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    let o = migrad(&[
        "sweep",
        "--mode",
        "nf",
        "--points",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn no_feedback_sweep_residuals() {
    let o = migrad(&[
        "sweep",
        "--mode",
        "nf",
        "--power",
        "1",
        "--gamma-min",
        "0.2",
        "--gamma-max",
        "3",
        "--points",
        "15",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let res = header.iter().position(|h| *h == "residual").unwrap();
    let mut rows = 0;
    for line in lines {
        let v: f64 = line.split(',').nth(res).unwrap().parse().unwrap();
        assert!(v.abs() <= 1e-6);
        rows += 1;
    }
    assert_eq!(rows, 15);
    assert!(!text.contains('\r'));
}

#[test]
fn csv_and_json_round_trip_to_the_same_values() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let json = dir.path().join("s.json");
    let base = ["sweep", "--mode", "sk", "--points", "6", "--n", "8"];
    let mut a = base.to_vec();
    a.extend(["--out", csv.to_str().unwrap()]);
    let mut b = base.to_vec();
    b.extend(["--format", "json", "--out", json.to_str().unwrap()]);
    assert!(migrad(&a).status.success());
    assert!(migrad(&b).status.success());

    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let names: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let csv_rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();

    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let json_names: Vec<String> = doc["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let json_rows: Vec<Vec<f64>> = doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            r.as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_f64().unwrap())
                .collect()
        })
        .collect();
    assert_eq!(names, json_names);
    assert_eq!(csv_rows, json_rows);
}

#[test]
fn repeated_runs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let p = dir.path().join(name);
        let o = migrad(&[
            "figure",
            "4",
            "--points",
            "9",
            "--threads",
            threads,
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        fs::read(p).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "4");
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn bits_flag_rescales_information() {
    let nats = migrad(&["figure", "2", "--points", "2"]);
    let bits = migrad(&["figure", "2", "--points", "2", "--bits"]);
    let cap = |o: &Output| -> f64 {
        stdout(o)
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(3)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((cap(&bits) - cap(&nats) / std::f64::consts::LN_2).abs() < 1e-10);
}

#[test]
fn help_documents_columns_with_units() {
    let o = migrad(&["sweep", "--help"]);
    let text = stdout(&o);
    for col in [
        "gamma (gain)",
        "mutual_information (nats)",
        "residual (nats per unit gamma)",
    ] {
        assert!(text.contains(col), "missing {col}");
    }
}

#[test]
fn engine_suite_json_report() {
    let o = migrad(&["verify", "--suite", "engine", "--json"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["passed"], true);
    for check in doc["checks"].as_array().unwrap() {
        for key in ["check_id", "target", "measured", "tolerance", "pass"] {
            assert!(check.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn injected_fault_fails_the_feedback_suite() {
    let o = migrad(&[
        "verify",
        "--suite",
        "sk",
        "--json",
        "--inject-fault",
        "drop-half-mmse",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let check = doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["check_id"] == "sk.identity_fd")
        .unwrap();
    assert_eq!(check["pass"], false);
    assert!(check["measured"].as_f64().unwrap() > 0.1);
}

#[test]
fn clean_suites_pass() {
    for suite in ["engine", "sk", "nf", "mc"] {
        let o = migrad(&["verify", "--suite", suite]);
        assert!(o.status.success(), "{suite}: {}", stdout(&o));
    }
}
