//! Exit-code contract and worked examples of every subcommand.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spatial-arma"))
        .args(args)
        .env("SPATIAL_ARMA_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

const FIRST_ORDER: &str = r#"{"d": 2, "R": [[1,0],[0,1],[1,1]], "phi": [0.2, 0.2, 0.1]}"#;
const HALF_HALF: &str = r#"{"d": 2, "R": [[1,0],[0,1]], "phi": [0.5, 0.5]}"#;
const CANCELLING: &str = r#"{"d": 2, "R": [[1,0],[0,1]], "phi": [0.5, 0.5], "S": [[1,0],[0,1],[1,1]], "theta": [-1, -1, 1]}"#;
const EMPTY: &str = r#"{"d": 2}"#;

/// Data rows of a coefficient CSV as (k, re, im).
fn csv_rows(text: &str) -> Vec<(Vec<i64>, f64, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let n = f.len();
            let k = f[..n - 2].iter().map(|x| x.parse().unwrap()).collect();
            (k, f[n - 2].parse().unwrap(), f[n - 1].parse().unwrap())
        })
        .collect()
}

#[test]
fn check_verdict_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let fo = write(dir.path(), "fo.json", FIRST_ORDER);
    let o = run(&["check", "--model", &fo, "--noise", "gaussian"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["verdict"], "Exists");

    let hh = write(dir.path(), "hh.json", HALF_HALF);
    assert_eq!(code(&run(&["check", "--model", &hh, "--noise", "gaussian"])), 1);

    let empty = write(dir.path(), "empty.json", EMPTY);
    let o = run(&["check", "--model", &empty, "--noise", "gaussian"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout).to_lowercase();
    assert!(text.contains("trivial"), "{text}");

    let lp = run(&["check", "--model", &fo, "--noise", "logpareto:1.5"]);
    assert_eq!(code(&lp), 1);
}

#[test]
fn input_error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{ not json");
    assert_eq!(code(&run(&["check", "--model", &bad, "--noise", "gaussian"])), 64);
    let mismatch = write(dir.path(), "mm.json", r#"{"d": 2, "R": [[1,0,0]], "phi": [0.5]}"#);
    assert_eq!(code(&run(&["check", "--model", &mismatch, "--noise", "gaussian"])), 65);
    let fo = write(dir.path(), "fo.json", FIRST_ORDER);
    assert_eq!(code(&run(&["check", "--model", &fo, "--noise", "nosuchlaw"])), 64);
    assert_eq!(code(&run(&["frobnicate"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
    let missing = dir.path().join("absent.json").display().to_string();
    assert_eq!(code(&run(&["check", "--model", &missing, "--noise", "gaussian"])), 64);
}

#[test]
fn coefficient_methods_agree_and_refuse() {
    let dir = tempfile::tempdir().unwrap();
    let fo = write(dir.path(), "fo.json", FIRST_ORDER);
    let del = run(&["coeffs", "--model", &fo, "--method", "delannoy", "--box", "10"]);
    assert_eq!(code(&del), 0, "{}", String::from_utf8_lossy(&del.stderr));
    let rec = run(&["coeffs", "--model", &fo, "--method", "recursion", "--box", "10"]);
    let (a, b) = (csv_rows(&String::from_utf8_lossy(&del.stdout)), csv_rows(&String::from_utf8_lossy(&rec.stdout)));
    assert_eq!(a.len(), 121);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.0, y.0);
        assert!((x.1 - y.1).abs() <= 1e-8 && (x.2 - y.2).abs() <= 1e-8);
    }

    let out = dir.path().join("coeffs");
    let o = run(&["coeffs", "--model", &fo, "--method", "recursion", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(out.join("coefficients.csv").exists() && out.join("decay_fit.json").exists());

    let hh = write(dir.path(), "hh.json", HALF_HALF);
    let o = run(&["coeffs", "--model", &hh, "--method", "fft", "--box", "4"]);
    assert_eq!(code(&o), 66, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("aliasing"));

    let empty = write(dir.path(), "empty.json", EMPTY);
    let o = run(&["coeffs", "--model", &empty, "--method", "recursion"]);
    let rows = csv_rows(&String::from_utf8_lossy(&o.stdout));
    assert_eq!(rows, vec![(vec![0, 0], 1.0, 0.0)]);

    let second = write(dir.path(), "second.json", r#"{"d": 2, "R": [[2,0]], "phi": [0.5]}"#);
    assert_eq!(code(&run(&["coeffs", "--model", &second, "--method", "delannoy"])), 64);
}

#[test]
fn simulation_artifacts_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let fo = write(dir.path(), "fo.json", FIRST_ORDER);
    let out = dir.path().join("sim");
    let o = run(&[
        "simulate", "--model", &fo, "--noise", "gaussian", "--window", "128", "--truncation", "30", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["field.csv", "field.pgm", "residual.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("residual.json")).unwrap()).unwrap();
    assert_eq!(report["within_bound"], true);
    let pgm = std::fs::read(out.join("field.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n128 128\n255\n"));

    let o = run(&[
        "simulate", "--model", &fo, "--noise", "gaussian", "--truncation", "30", "--box", "20", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 67);

    let canc = write(dir.path(), "canc.json", CANCELLING);
    let pert = dir.path().join("pert");
    let o = run(&[
        "simulate", "--model", &canc, "--noise", "gaussian", "--window", "32", "--truncation", "20", "--perturb", "0,0",
        "--perturb-u", "0.25", "--out", pert.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(pert.join("residual.json")).unwrap()).unwrap();
    assert!(report["perturbation"]["delta_max"].as_f64().unwrap() <= 1e-10);

    let zero = dir.path().join("zero");
    let o = run(&[
        "simulate", "--model", &fo, "--noise", "deterministic:0", "--window", "16", "--truncation", "10", "--out",
        zero.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let field = std::fs::read_to_string(zero.join("field.csv")).unwrap();
    assert!(csv_rows(&field).iter().all(|r| r.1 == 0.0 && r.2 == 0.0));
    assert_eq!(stdout_json(&o)["residual_max_abs"], 0.0);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let hh = write(dir.path(), "hh.json", HALF_HALF);
    let fo = write(dir.path(), "fo.json", FIRST_ORDER);
    let cfg = write(dir.path(), "cfg.json", &format!(r#"{{"model": "{hh}", "noise": "gaussian"}}"#));
    assert_eq!(code(&run(&["check", "--config", &cfg])), 1);
    assert_eq!(code(&run(&["check", "--config", &cfg, "--model", &fo])), 0);
    let broken = write(dir.path(), "broken.json", "[1, 2]");
    assert_eq!(code(&run(&["check", "--config", &broken])), 64);
}

#[test]
fn delannoy_and_spectrum_subcommands() {
    let o = run(&["delannoy", "table", "--phi", "1,1,1", "--max", "3"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().count() == 17, "{text}");

    let o = run(&["delannoy", "identity", "--phi", "0.5,-0.3,0.1", "--beta", "10", "--k", "40"]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["max_abs_diff"].as_f64().unwrap() <= 1e-8);

    let o = run(&["delannoy", "counting", "--phi", "0.5,0.3,0.1", "--x", "10,100"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["rows"].as_array().unwrap().len(), 2);

    let o = run(&["delannoy", "asymptotic", "--theta", "1.0", "--beta", "3", "--from", "10", "--to", "100"]);
    assert_eq!(code(&o), 0);

    let dir = tempfile::tempdir().unwrap();
    let hh = write(dir.path(), "hh.json", HALF_HALF);
    let o = run(&["spectrum", "--model", &hh, "--levels", "4", "--grid", "32", "--h2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert!(v.to_string().contains("Divergent"));
}
