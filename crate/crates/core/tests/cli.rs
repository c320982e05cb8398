use std::path::Path;
use std::process::{Command, Output};

use lel::generator::Generator;
use lel::io::{builtin, load_generator};

fn lel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lel"))
        .args(args)
        .env("LEL_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn exit_codes() {
    assert_eq!(lel(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(lel(&["validate"]).status.code(), Some(64));
    assert_eq!(lel(&["validate", "--generator", "builtin:nope"]).status.code(), Some(64));
    assert_eq!(lel(&["validate", "--generator", "/nonexistent/g.json"]).status.code(), Some(64));
    assert_eq!(lel(&["fig1", "--generator", "builtin:qubit-xz", "--alphas", "-1,2"]).status.code(), Some(64));
    assert_eq!(lel(&["validate", "--generator", "builtin:carlen-maas"]).status.code(), Some(1));
    assert_eq!(lel(&["--help"]).status.code(), Some(0));
}

#[test]
fn validate_reports_gns() {
    let o = lel(&["validate", "--generator", &data("depol.json")]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("GNS: pass"), "{s}");
    assert!(s.contains("primitive: pass"), "{s}");

    let o = lel(&["validate", "--generator", "builtin:carlen-maas"]);
    assert!(stdout(&o).contains("GNS: fail"));
}

#[test]
fn fig1_minimum_at_two() {
    let o = lel(&["fig1", "--generator", "builtin:carlen-maas", "--alphas", "0.5:4:0.25"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("alpha,residual\n"));
    let rows = csv_rows(&s);
    let best = rows.iter().min_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    assert_eq!(best[0], 2.0);
    assert!(best[1] < 1e-10);
    assert!(rows.iter().filter(|r| r[0] != 2.0).all(|r| r[1] > 1e-4));
}

#[test]
fn simulate_is_monotone() {
    let o = lel(&[
        "simulate", "--generator", "builtin:qubit-xz", "--rho0", "random", "--seed", "3", "--alphas", "0.5,2",
        "--t-end", "2", "--dt", "0.01",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.starts_with("t,alpha,D,I\n"));
    for alpha in [0.5, 2.0] {
        let d: Vec<f64> = csv_rows(&s).into_iter().filter(|r| r[1] == alpha).map(|r| r[2]).collect();
        assert!(d.len() > 10);
        assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

#[test]
fn config_file_and_atomic_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("fig1.csv");
    std::fs::write(&cfg, r#"{"generator": "builtin:carlen-maas", "alphas": "1,2,3"}"#).unwrap();
    let o = lel(&["fig1", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv_rows(&text).len(), 3);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);

    let o = lel(&["fig1", "--config", cfg.to_str().unwrap(), "--alphas", "2"]);
    assert_eq!(csv_rows(&stdout(&o)).len(), 1);

    std::fs::write(&cfg, r#"{"generatr": "builtin:qubit-xz"}"#).unwrap();
    assert_eq!(lel(&["validate", "--config", cfg.to_str().unwrap()]).status.code(), Some(64));
}

#[test]
fn constants_and_compare_emit_json() {
    let o = lel(&["constants", "--generator", "builtin:qubit-xz", "--starts", "2", "--iterations", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["k_lower"].as_f64().unwrap() > 0.0);
    assert!(v["k_est"].as_f64().unwrap() >= v["k_lower"].as_f64().unwrap() - 1e-9);

    let o = lel(&["compare", "--generator", "builtin:qubit-xz", "--rho0", "near", "--alpha0", "2", "--alpha1", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], serde_json::Value::Bool(true));
}

#[test]
fn data_files_match_builtins() {
    for (file, spec) in [("depol.json", "depolarizing"), ("qubit_xz.json", "qubit-xz")] {
        let f = load_generator(&data(file)).unwrap();
        let b = builtin(spec).unwrap();
        let (f, b) = (f.require_gns().unwrap(), b.require_gns().unwrap());
        assert!(f.schrodinger().sub(b.schrodinger()).frobenius() < 1e-14, "{file}");
        assert_eq!(f.label(), b.label());
    }
}
