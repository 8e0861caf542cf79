//! End-to-end runs of the `movsum` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_movsum");

const IID: &str = r#"{ "name": "iid-normal", "kind": "independent", "marginals": { "family": "normal" } }"#;
const AR1: &str = r#"{
  "name": "ar1-half",
  "kind": "gaussian-assoc",
  "covariance": { "rule": "ar1", "phi": 0.5, "innovation_variance": 0.75 }
}"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn conditions_writes_lindeberg_row() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "iid.json", IID);
    let out = dir.path().join("out");
    let o = run(&["conditions", "--model", s(&model), "--n", "100", "--eps", "0.2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("conditions.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("lindeberg,")).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[1], "100");
    let value: f64 = fields[5].parse().unwrap();
    assert!((value - 0.26146).abs() < 1e-4);
    assert_eq!(fields[7], "fail");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("conditions.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["n"], 100);
    assert_eq!(json["config"]["seed"], 0);
    assert_eq!(json["config"]["eps"], 0.2);
    assert_eq!(json["model"]["name"], "iid-normal");
}

#[test]
fn unknown_subcommand_lists_valid_ones() {
    let o = run(&["simulate"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    for name in ["generate", "variance", "conditions", "clt", "fdd", "newman", "ruin"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // Usage: missing required parameter, unparsable flag, schema violation.
    let model = write(dir.path(), "iid.json", IID);
    assert_eq!(run(&["clt", "--model", s(&model), "--out", s(&out)]).status.code(), Some(2));
    assert_eq!(run(&["clt", "--model", s(&model), "--n", "ten"]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.json", "{\n  \"kind\": \"independent\",\n  \"marginals\": { \"family\": \"cauchy\" }\n}");
    let o = run(&["conditions", "--model", s(&bad), "--n", "10", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    // Precondition: uncertified model for newman.
    let neg = write(
        dir.path(),
        "neg.json",
        r#"{"kind": "gaussian-assoc", "covariance": {"rule": "explicit", "matrix": [[1, -0.5], [-0.5, 1]]}}"#,
    );
    let o = run(&["newman", "--model", s(&neg), "--k", "2", "--R", "100", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    // I/O: missing model file.
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["clt", "--model", s(&missing), "--n", "5"]).status.code(), Some(4));
}

#[test]
fn repeated_runs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "ar1.json", AR1);
    let mut bodies = Vec::new();
    let out = dir.path().join("out");
    for threads in ["1", "4", "4"] {
        let o = run(&[
            "--threads", threads, "clt", "--model", s(&model), "--n", "256", "--p", "n", "--R", "500", "--seed", "42",
            "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let files: Vec<Vec<u8>> = ["clt.csv", "clt.json", "clt_ensemble.csv"]
            .iter()
            .map(|f| fs::read(out.join(f)).unwrap())
            .collect();
        bodies.push(files);
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[1], bodies[2]);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "ar1.json", AR1);
    let out = dir.path().join("out");
    let config = write(
        dir.path(),
        "run.json",
        &format!(
            r#"{{"model": {:?}, "n": 64, "p": "2n", "ell": 4, "R": 300, "seed": 5, "out": {:?}}}"#,
            s(&model),
            s(&out)
        ),
    );
    let o = run(&["variance", "--config", s(&config), "--n", "32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("variance.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["n"], 32);
    assert_eq!(json["config"]["p"], "2n");
    assert_eq!(json["config"]["ell"], "4");
    assert_eq!(json["config"]["R"], 300);
    assert_eq!(json["results"]["p"], 64);
    let unknown = write(dir.path(), "typo.json", r#"{"nn": 3}"#);
    assert_eq!(run(&["variance", "--config", s(&unknown)]).status.code(), Some(2));
}

#[test]
fn every_subcommand_writes_only_into_out() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "ar1.json", AR1);
    let scenario = write(
        dir.path(),
        "ruin.json",
        r#"{"u": 5, "c": 1.2, "count": {"process": "one-per-period"},
            "claims": {"mean": 1, "model": {"kind": "independent", "marginals": {"family": "uniform"}}},
            "horizon": 10}"#,
    );
    let out = dir.path().join("reports");
    let m = s(&model);
    let o = s(&out);
    let runs: Vec<Vec<&str>> = vec![
        vec!["generate", "--model", m, "--n", "20", "--R", "3", "--out", o],
        vec!["variance", "--model", m, "--n", "20", "--out", o],
        vec!["conditions", "--model", m, "--n", "64", "--trend", "--out", o],
        vec!["clt", "--model", m, "--n", "64", "--R", "200", "--precision", "f32", "--out", o],
        vec!["fdd", "--model", m, "--n", "64", "--grid", "0.5,1", "--R", "200", "--out", o],
        vec!["newman", "--model", m, "--k", "3", "--grid", "-1,0.5", "--R", "500", "--out", o],
        vec!["ruin", "--scenario", s(&scenario), "--R", "200", "--out", o],
    ];
    for args in &runs {
        let r = run(args);
        assert!(r.status.success(), "{args:?}: {}", String::from_utf8_lossy(&r.stderr));
    }
    let mut top: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    top.sort();
    assert_eq!(top, vec!["ar1.json", "reports", "ruin.json"]);
    let mut files: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    for name in ["generate", "variance", "conditions", "clt", "fdd", "newman", "ruin"] {
        assert!(files.contains(&format!("{name}.csv")), "{files:?}");
        assert!(files.contains(&format!("{name}.json")), "{files:?}");
    }
    let newman = fs::read_to_string(out.join("newman.csv")).unwrap();
    assert_eq!(newman.lines().count(), 1 + 4);
    let ruin: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("ruin.json")).unwrap()).unwrap();
    assert!(ruin["results"]["note"].as_str().unwrap().contains("drift"));
}
