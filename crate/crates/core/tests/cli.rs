use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn blenderlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blenderlab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

/// Top-level keys of pretty-printed JSON appear in sorted order.
fn keys_sorted(text: &str) -> bool {
    let top: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \"") && !l.starts_with("   "))
        .map(|l| l.trim_start().split('"').nth(1).unwrap())
        .collect();
    let mut sorted = top.clone();
    sorted.sort_unstable();
    !top.is_empty() && top == sorted
}

#[test]
fn certify_default_is_certified() {
    let o = blenderlab(&["certify", "--default", "--samples", "50"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    assert!(keys_sorted(&text));
    let v = json(&o);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "certify");
    assert_eq!(v["certificate"]["status"], "certified");
    let conds = v["certificate"]["conditions"].as_object().unwrap();
    assert_eq!(conds.keys().collect::<Vec<_>>(), ["BH1", "BH2", "BH3", "BH4", "BH5", "BH6"]);
}

#[test]
fn certify_refutations_exit_2() {
    assert_eq!(code(&blenderlab(&["certify", "--lambda", "2.5", "--samples", "20"])), 2);
    let o = blenderlab(&["certify", "--mu", "0.03", "--samples", "20"]);
    assert_eq!(code(&o), 2);
    assert_eq!(json(&o)["certificate"]["conditions"]["BH3"]["status"], "refuted");
}

#[test]
fn output_is_deterministic() {
    let args = ["certify", "--default", "--samples", "40", "--seed", "9"];
    assert_eq!(blenderlab(&args).stdout, blenderlab(&args).stdout);
}

#[test]
fn tangency_default_fold() {
    let o = blenderlab(&["tangency", "--default", "--apex", "0.05", "--samples", "40"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let t = &v["tangency"];
    assert!(t["residual_angle"].as_f64().unwrap() < 1e-8);
    assert!((t["t_star"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(t["converged"], true);
}

#[test]
fn tangency_bad_apex_is_an_error() {
    let o = blenderlab(&["tangency", "--default", "--apex", "0.15", "--samples", "20"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("apex outside superposition interval"));
}

#[test]
fn tangency_not_converged_is_inconclusive() {
    let o = blenderlab(&["tangency", "--default", "--n-iter", "3", "--tol", "1e-10", "--samples", "20"]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["tangency"]["converged"], false);
}

#[test]
fn tangency_refused_on_uncertified_model() {
    let o = blenderlab(&["tangency", "--mu", "0.03", "--samples", "20"]);
    assert_eq!(code(&o), 4);
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_flag_is_an_error() {
    assert_eq!(code(&blenderlab(&["certify", "--bogus"])), 1);
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn config_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "mu = 0.03\n[certify]\nsamples_per_class = 20\n");
    // the file's mu is refuted
    assert_eq!(code(&blenderlab(&["certify", "--config", &cfg])), 2);
    // the flag wins over the file
    let o = blenderlab(&["certify", "--config", &cfg, "--mu", "0.02"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["model"]["mu"], 0.02);
}

#[test]
fn malformed_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "lambda = \"fast\"\n");
    let o = blenderlab(&["certify", "--config", &bad]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());
    let unknown = write(dir.path(), "unknown.toml", "[certify]\nalhpa = 0.1\n");
    assert_eq!(code(&blenderlab(&["certify", "--config", &unknown])), 1);
    assert_eq!(code(&blenderlab(&["certify", "--config", "/nonexistent/run.toml"])), 1);
}

#[test]
fn sweep_writes_csv_and_json() {
    let o = blenderlab(&["sweep", "--lambda", "1.2,1.5", "--mu-fraction", "0.5,1.0", "--samples", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let headers = r.headers().unwrap().clone();
    assert_eq!(&headers[0], "lambda");
    assert_eq!(&headers[1], "mu");
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    let status = headers.iter().position(|h| h == "status").unwrap();
    // mu = (lambda - 1) delta sits on the boundary of the admissible range
    assert_eq!(&rows[0][status], "certified");
    assert_eq!(&rows[1][status], "refuted");

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.json");
    let o = blenderlab(&["sweep", "--lambda", "1.3", "--mu-fraction", "0.5", "--samples", "20", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
    assert!(dir.path().join("grid.csv").exists());
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let run = |jobs: &str| blenderlab(&["sweep", "--lambda", "1.2,1.4,1.6", "--samples", "10", "--jobs", jobs]).stdout;
    assert_eq!(run("1"), run("4"));
}

#[test]
fn robustness_small_run() {
    let o = blenderlab(&["robustness", "--default", "--count", "2", "--n-iter", "8", "--samples", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["report"]["all_passed"], true);
    assert_eq!(v["report"]["cases"].as_array().unwrap().len(), 2);
}

#[test]
fn export_disks_lists_manifolds_and_fold() {
    let o = blenderlab(&["export-disks", "--default", "--fold-samples", "3"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let e = &v["export"];
    assert_eq!(e["local_manifolds"].as_array().unwrap().len(), 4);
    let disks = e["fold"]["disks"].as_array().unwrap();
    assert_eq!(disks.len(), 3);
    assert!(disks[1].get("image_a").is_some() && disks[1].get("image_b").is_some());
}
