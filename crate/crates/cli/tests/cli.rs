use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modality::benchmark::find_case;
use modality::rng::{sample_mixture, Component, MixtureSpec, Seed};
use serde_json::Value;
use tempfile::TempDir;

fn modality(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modality"))
        .args(args)
        .env_remove("MODALITY_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_values(dir: &Path, name: &str, values: &[f64]) -> PathBuf {
    let body: String = std::iter::once("value\n".to_string())
        .chain(values.iter().map(|v| format!("{v:.17e}\n")))
        .collect();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn case_file(dir: &Path, case: &str) -> String {
    let x = sample_mixture(&find_case(case).unwrap().spec, Seed(0)).unwrap();
    let file = format!("{}.csv", case.replace(' ', "_"));
    write_values(dir, &file, x.values()).display().to_string()
}

fn normal_file(dir: &Path) -> String {
    let spec = MixtureSpec::new(vec![Component::new(1.0, 0.0, 1.0)], 500).unwrap();
    let x = sample_mixture(&spec, Seed(1)).unwrap();
    write_values(dir, "normal.csv", x.values()).display().to_string()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

#[test]
fn analyze_well_separated() {
    let dir = TempDir::new().unwrap();
    let path = case_file(dir.path(), "Well-separated");
    let o = modality(&["analyze", &path, "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["command"], "analyze");
    assert_eq!(v["input"]["n"], 400);
    let h = v["h_crit"]["h_crit"].as_f64().unwrap();
    assert!((1.80..=1.92).contains(&h), "{h}");
    assert_eq!(v["h_crit"]["success"], true);
    assert_eq!(v["modes"]["locations"].as_array().unwrap().len(), 2);
    assert_eq!(v["strength"]["label"], "strong");
    let w1 = v["decomposition"]["component1"]["weight"].as_f64().unwrap();
    assert!((0.45..=0.55).contains(&w1));

    let text = stdout(&modality(&["analyze", &path]));
    assert!(text.contains("h_crit (k = 2)"));
    assert!(text.contains("strong"));
}

#[test]
fn analyze_with_interval() {
    let dir = TempDir::new().unwrap();
    let path = case_file(dir.path(), "Small sample bimodal");
    let o = modality(&["analyze", &path, "--ci", "--resamples", "199", "--format", "json"]);
    assert!(o.status.success());
    let v = json(&o);
    let h = v["h_crit"]["h_crit"].as_f64().unwrap();
    let ci = &v["h_crit"]["ci"];
    assert!(ci["low"].as_f64().unwrap() <= h && h <= ci["high"].as_f64().unwrap());
}

#[test]
fn single_value_file_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let p = write_values(dir.path(), "one.csv", &[3.0]);
    let o = modality(&["analyze", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fewer than 2 numeric values"));
    let missing = modality(&["modes", dir.path().join("absent.csv").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(modality(&["analyze"]).status.code(), Some(1));
    assert_eq!(modality(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(modality(&["test", "x.csv", "--method", "nope"]).status.code(), Some(1));
    assert_eq!(modality(&["--help"]).status.code(), Some(0));
}

#[test]
fn silverman_test_conclusions() {
    let dir = TempDir::new().unwrap();
    let sep = case_file(dir.path(), "Well-separated");
    let v = json(&modality(&["test", &sep, "--resamples", "199", "--format", "json"]));
    assert_eq!(v["reject"], true);
    assert!(v["result"]["p_value"].as_f64().unwrap() < 0.01);

    let barely = case_file(dir.path(), "Barely separated");
    let o = modality(&["test", &barely, "--resamples", "199"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("conclusion: fail to reject unimodality"));
}

#[test]
fn dip_and_excess_mass() {
    let dir = TempDir::new().unwrap();
    let normal = normal_file(dir.path());
    let v = json(&modality(&["test", &normal, "--method", "dip", "--format", "json"]));
    assert_eq!(v["reject"], false);
    assert_eq!(v["result"]["method"], "dip");

    let e = json(&modality(&["test", &normal, "--method", "excess", "--format", "json"]));
    assert!(e["result"]["p_value"].is_null());
    assert_eq!(e["result"]["mass"].as_array().unwrap().len(), 200);
}

#[test]
fn seed_from_environment() {
    let dir = TempDir::new().unwrap();
    let path = case_file(dir.path(), "Barely separated");
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_modality"));
        c.args(["test", &path, "--resamples", "99", "--format", "json"]).args(extra);
        match env {
            Some(s) => c.env("MODALITY_SEED", s),
            None => c.env_remove("MODALITY_SEED"),
        };
        json(&c.output().unwrap())["result"]["p_value"].as_f64().unwrap()
    };
    let via_env = run(Some("17"), &[]);
    assert_eq!(via_env, run(None, &["--seed", "17"]));
    assert_eq!(run(Some("17"), &["--seed", "0"]), run(None, &[]));
    let others: Vec<f64> = ["0", "1", "2"].iter().map(|s| run(Some(s), &[])).collect();
    assert!(others.iter().any(|&p| p != via_env));
}

#[test]
fn modes_and_decompose() {
    let dir = TempDir::new().unwrap();
    let path = case_file(dir.path(), "Trimodal");
    let v = json(&modality(&["modes", &path, "--format", "json"]));
    assert_eq!(v["modes"]["locations"].as_array().unwrap().len(), 3);
    let wide = json(&modality(&["modes", &path, "--bandwidth", "5", "--format", "json"]));
    assert_eq!(wide["modes"]["locations"].as_array().unwrap().len(), 1);
    assert!(wide["trough"].is_null());

    let d = json(&modality(&["decompose", &case_file(dir.path(), "Unequal weights"), "--format", "json"]));
    let w = d["decomposition"]["component1"]["weight"].as_f64().unwrap();
    assert!((0.15..=0.25).contains(&w), "{w}");
    let uni = modality(&["decompose", &normal_file(dir.path())]);
    assert_eq!(uni.status.code(), Some(2));
}

#[test]
fn benchmark_csv_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = modality(&["benchmark", "--seeds", "2", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(stdout(&o).contains("Well-separated"));
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 13);
}
