use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use memfun_core::grid::io::read_samples;
use serde_json::Value;
use tempfile::TempDir;

fn memfun(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memfun"))
        .args(args)
        .env("MEMFUN_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const EXP_CONST: &str = r#""kernel": {"type": "exponential", "alpha": 1.0},
    "sensitivity": {"kind": "constant", "value": 1.0}"#;

#[test]
fn eval_zero_trajectory() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "f.csv", "t,value\n0,0\n0.5,0\n1,0\n");
    let cfg = write(
        dir.path(),
        "run.json",
        &format!(r#"{{ {EXP_CONST}, "trajectory": {{"file": "f.csv"}}, "grid_points": 129 }}"#),
    );
    let o = memfun(&["eval", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("S = 0.0000000000000000e0"));
}

#[test]
fn eval_indicator_scenario() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "f.csv", "0,1\n0.5,1\n0.5,0\n1,0\n");
    let cfg = write(
        dir.path(),
        "run.json",
        &format!(r#"{{ {EXP_CONST}, "trajectory": {{"file": "f.csv"}}, "plot": true }}"#),
    );
    let out = dir.path().join("out");
    let o = memfun(&["eval", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let s = report["S_value"].as_f64().unwrap();
    let expected = 1.0 + (1.0 - (-0.5f64).exp()) / (1.0 - (-1.0f64).exp());
    assert!((s - expected).abs() < 1e-7, "{s}");
    assert_eq!(report["argmax_t"].as_f64(), Some(0.5));
    assert!(out.join("plot.csv").is_file());
}

#[test]
fn plot_csv_round_trips_node_values() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        &format!(
            r#"{{ {EXP_CONST}, "horizon": 2.0, "grid_points": 65, "plot": true,
                "trajectory": {{"generator": {{"kind": "fourier", "amplitude": 1.0}}, "seed": 5}} }}"#
        ),
    );
    let out = dir.path().join("out");
    let o = memfun(&["eval", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let (times, values) = read_samples(fs::File::open(out.join("plot.csv")).unwrap()).unwrap();
    let nodes: Vec<f64> = report["nodes"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let abs_f: Vec<f64> = report["abs_f"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(times, nodes);
    assert_eq!(values, abs_f);
}

#[test]
fn malformed_csv_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "f.csv", "t,value\n0,1\n0.5,oops\n1,0\n");
    let cfg = write(dir.path(), "run.json", &format!(r#"{{ {EXP_CONST}, "trajectory": {{"file": "f.csv"}} }}"#));
    let o = memfun(&["eval", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.json", &format!(r#"{{ {EXP_CONST}, "trajectory": {{"file": "nope.csv"}} }}"#));
    assert_eq!(memfun(&["eval", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn even_grid_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.json", &format!(r#"{{ {EXP_CONST}, "trajectory": {{"constant": 1.0}} }}"#));
    assert_eq!(memfun(&["eval", "--config", &cfg, "--grid", "64"]).status.code(), Some(2));
}

#[test]
fn unknown_kernel_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.json", r#"{"kernel": {"type": "gaussian", "width": 1.0}}"#);
    assert_eq!(memfun(&["classify-kernel", "--config", &cfg]).status.code(), Some(2));
    let vcfg = write(dir.path(), "verify.json", r#"{"kernels": [{"type": "gaussian"}]}"#);
    assert_eq!(memfun(&["verify", "--config", &vcfg]).status.code(), Some(2));
}

#[test]
fn non_convergence_exits_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        &format!(r#"{{ {EXP_CONST}, "trajectory": {{"constant": 1.0}}, "grid_points": 9, "fast_path": false }}"#),
    );
    let o = memfun(&["eval", "--config", &cfg, "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn classify_examples() {
    let dir = TempDir::new().unwrap();
    let run = |kernel: &str| {
        let cfg = write(dir.path(), "k.json", &format!(r#"{{"kernel": {kernel}}}"#));
        let o = memfun(&["classify-kernel", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(0));
        stdout(&o)
    };
    let exp = run(r#"{"type": "exponential", "alpha": 1.0}"#);
    assert!(exp.contains("regular = true"));
    let pl = run(r#"{"type": "power_law", "gamma": 0.5, "epsilon": 0.25}"#);
    assert!(pl.contains("regular = false") && pl.contains("generalized = true") && pl.contains("failed R2"));
    let fm = run(r#"{"type": "finite_memory", "delta": 0.5}"#);
    assert!(fm.contains("regular = false") && fm.contains("failed R3"));
}

#[test]
fn verify_sensitivity_modes() {
    let dir = TempDir::new().unwrap();
    let inst = write(
        dir.path(),
        "inst.json",
        r#"{"sensitivity": {"kind": "instantaneous", "lambda_min": 0.5, "lambda_max": 1.5, "gamma0": 1.0}}"#,
    );
    let o = memfun(&["verify-sensitivity", "--config", &inst, "--grid", "129"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("AS2 pass"));
    let broken = write(
        dir.path(),
        "broken.json",
        r#"{"sensitivity": {"kind": "instantaneous", "lambda_min": 0.5, "lambda_max": 1.5, "gamma0": 1.0, "lipschitz_scale": 0.5}}"#,
    );
    assert_eq!(memfun(&["verify-sensitivity", "--config", &broken, "--grid", "129"]).status.code(), Some(1));
    let hist = write(
        dir.path(),
        "hist.json",
        r#"{"sensitivity": {"kind": "historical", "lambda_min": 0.5, "lambda_max": 1.5, "gamma0": 1.0, "alpha0": 1.0, "beta0": 2.0}}"#,
    );
    let o = memfun(&["verify-sensitivity", "--config", &hist, "--grid", "129"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("theorem.induced_sensitivity.P2"));
}

#[test]
fn verify_falsification_exits_one() {
    let dir = TempDir::new().unwrap();
    let mut cfg: Value = serde_json::to_value(memfun_core::VerificationConfig::default()).unwrap();
    cfg["grid_points"] = 129.into();
    cfg["sensitivities"] = serde_json::json!([{
        "kind": "historical", "lambda_min": 0.5, "lambda_max": 1.5, "gamma0": 2.0,
        "alpha0": 1.0, "beta0": 0.0, "lipschitz_scale": 0.5
    }]);
    let path = write(dir.path(), "verify.json", &cfg.to_string());
    let o = memfun(&["verify", "--config", &path]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = memfun(&["verify", "--seed", "42", "--grid", "129", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let ra = fs::read(a.join("verification.json")).unwrap();
    let rb = fs::read(b.join("verification.json")).unwrap();
    assert_eq!(ra, rb);
}
