// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn heatglue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatglue"))
        .args(args)
        .env_remove("HEATGLUE_THREADS")
        .output()
        .expect("binary runs")
}

fn reports(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("one JSON object per line"))
        .collect()
}

fn f(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or(f64::NAN)
}

/// The status must follow from the report's own fields.
fn check_status(r: &Value) {
    let pass = f(r, "residual") <= f(r, "tol").max(f(r, "bound"));
    let want = if pass { "pass" } else { "fail" };
    if r["status"] != "error" {
        assert_eq!(r["status"], want, "{r}");
    }
}

#[test]
fn line_fixture_glue_matches_closed_form() {
    let line3 = fixture("line3.json");
    let out = heatglue(&["graph", "glue", "--input", &line3, "--t", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let rs = reports(&out);
    assert_eq!(rs.len(), 9);
    for r in &rs {
        check_status(r);
        assert!(f(r, "residual") < 1e-12, "{r}");
    }
    let k13 = rs.iter().find(|r| r["case"] == "glue:1:3").unwrap();
    let want = 1.0 / 3.0 - (-1.0f64).exp() / 2.0 + (-3.0f64).exp() / 6.0;
    assert!((f(k13, "reference") - want).abs() < 1e-15);

    let out = heatglue(&["graph", "glue", "--input", &line3, "--t", "1", "--method", "series", "--kmax", "30"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(reports(&out).iter().all(|r| f(r, "residual") <= f(r, "bound").max(1e-12)));
}

#[test]
fn dirichlet_line_fixture() {
    let dl = fixture("dirichlet_line.json");
    let out = heatglue(&["graph", "glue", "--input", &dl, "--t", "0.7"]);
    assert_eq!(out.status.code(), Some(0));
    let rs = reports(&out);
    assert_eq!(rs.iter().filter(|r| r["inputs"]["kernel"] == "dirichlet").count(), 9);
    assert_eq!(rs.iter().filter(|r| r["inputs"]["kernel"] == "heat").count(), 25);
    assert!(rs.iter().all(|r| f(r, "residual") < 1e-12));

    let out = heatglue(&["graph", "cut", "--input", &dl, "--interface", "0,4", "--m2", "1.5"]);
    assert_eq!(out.status.code(), Some(0));
    let rs = reports(&out);
    assert_eq!(rs.len(), 9);
    assert!(rs.iter().all(|r| f(r, "residual") < 1e-12));
}

#[test]
fn pathsum_report() {
    let out = heatglue(&[
        "graph", "pathsum", "--input", &fixture("line3.json"), "--u", "1", "--v", "3", "--t", "1", "--eps", "1e-12",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = &reports(&out)[0];
    assert!(f(r, "residual") <= f(r, "bound"));
    assert!(r["inputs"]["cutoff"].as_u64().unwrap() > 0);
}

#[test]
fn interval_pair_fixture() {
    let pair = fixture("interval_pair.json");
    let out = heatglue(&["interval", "glue", "--input", &pair, "--formula", "I"]);
    assert_eq!(out.status.code(), Some(0));
    let rs = reports(&out);
    assert_eq!(rs.len(), 18);
    assert!(rs.iter().all(|r| f(r, "residual") < 1e-8));

    let out = heatglue(&["interval", "glue", "--input", &pair, "--formula", "II", "--nmax", "6", "--tol", "1e-6"]);
    assert_eq!(out.status.code(), Some(0));
    for r in reports(&out) {
        check_status(&r);
        assert!(f(&r, "residual") < f(&r, "bound").max(1e-6), "{r}");
    }
}

#[test]
fn continuum_commands() {
    let out = heatglue(&["ray", "glue", "--x", "0.5", "--y", "1", "--t", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let out = heatglue(&[
        "interval", "glue", "--L1", "1", "--L2", "2", "--x", "0.4", "--y", "1.1", "--t", "0.7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = heatglue(&["circle", "cut", "--L", "2", "--cuts", "0,1", "--x", "0.3", "--y", "0.7", "--t", "0.4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(f(&reports(&out)[0], "residual") < 1e-5);
    let out = heatglue(&["cylinder", "check", "--L1", "1", "--L2", "1", "--Lgamma", "1.5", "--t", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(reports(&out).len(), 2);
    let out = heatglue(&["dn", "cylinder", "--L", "1", "--m2", "4", "--kmax", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let rs = reports(&out);
    assert_eq!(rs.len(), 6);
    for r in rs.iter().filter(|r| f(&r["inputs"], "muL") > 4.0) {
        assert!(f(r, "residual") < 0.05);
    }
}

#[test]
fn verify_empty_and_full() {
    let out = heatglue(&["verify", "--suite", "all", "--seed", "7", "--tol", "1e-8", "--cases", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());

    let out = heatglue(&["verify", "--suite", "all", "--seed", "7", "--cases", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rs = reports(&out);
    rs.iter().for_each(check_status);
    let mut ids: Vec<&str> = rs.iter().map(|r| r["case"].as_str().unwrap()).collect();
    let n = ids.len();
    ids.dedup();
    assert_eq!(ids.len(), n);
}

#[test]
fn deterministic_across_thread_counts() {
    let args = ["verify", "--suite", "graph", "--seed", "11", "--cases", "6"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_heatglue"))
            .args(args)
            .env("HEATGLUE_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("3"));
    assert_eq!(one, run("1"));
}

#[test]
fn csv_format() {
    let out = heatglue(&["--format", "csv", "ray", "glue", "--x", "0.5", "--y", "1", "--t", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("case,inputs,value,reference,residual,bound,tol,status,error"));
    assert!(lines.next().unwrap().starts_with("ray,"));
}

#[test]
fn exit_codes() {
    // tolerance failure: a fixture whose reference is off by 1e-3
    let mut fx: Value = serde_json::from_str(&std::fs::read_to_string(fixture("line3.json")).unwrap()).unwrap();
    let c = &mut fx["references"][0]["kernel"]["terms"][0]["coef"];
    *c = (c.as_f64().unwrap() + 1e-3).into();
    let path = std::env::temp_dir().join(format!("heatglue-bad-{}.json", std::process::id()));
    std::fs::write(&path, fx.to_string()).unwrap();
    let out = heatglue(&["graph", "glue", "--input", path.to_str().unwrap(), "--t", "1"]);
    std::fs::remove_file(&path).ok();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(reports(&out).iter().filter(|r| r["status"] == "fail").count(), 1);

    // input errors
    assert_eq!(heatglue(&["graph", "glue", "--input", "/nonexistent.json", "--t", "1"]).status.code(), Some(2));
    assert_eq!(heatglue(&["ray", "glue", "--x", "0", "--y", "1", "--t", "1"]).status.code(), Some(2));
    assert_eq!(heatglue(&["ray", "glue", "--x", "nope", "--y", "1", "--t", "1"]).status.code(), Some(2));
    assert_eq!(heatglue(&["interval", "glue", "--L1", "1"]).status.code(), Some(2));
    assert_eq!(heatglue(&["circle", "cut", "--L", "2", "--cuts", "0", "--x", "0.3", "--y", "0.7", "--t", "0.4"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_heatglue"))
        .args(["verify", "--cases", "0"])
        .env("HEATGLUE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // numerical failure: the path sum cannot reach eps within its length cap
    let out = heatglue(&[
        "graph", "pathsum", "--input", &fixture("line3.json"), "--u", "1", "--v", "3", "--t", "1000", "--eps", "1e-15",
    ]);
    assert_eq!(out.status.code(), Some(3));
}
