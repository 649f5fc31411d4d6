use std::f64::consts::E;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use glde_core::config::SystemConfig;
use glde_core::testkit::{example, impulse_forcing, scalar_with_jump};
use serde_json::Value;
use tempfile::TempDir;

fn glde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glde")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn example_config(dir: &TempDir, id: &str) -> PathBuf {
    let sys = example(id).unwrap().system;
    write(dir, &format!("{id}.json"), &SystemConfig::from_system(&sys).to_canonical_json())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_stdout(out: &Output) -> Value {
    assert_eq!(code(out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// Parsed CSV rows as (t, side, values).
fn rows(csv: &str) -> Vec<(f64, String, Vec<f64>)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',');
            let t = it.next().unwrap().parse().unwrap();
            let side = it.next().unwrap().to_string();
            (t, side, it.map(|v| v.parse().unwrap()).collect())
        })
        .collect()
}

const SINGULAR: &str = r#"{"dimension":1,"period":1,"A":{"density":{"mesh":[0,1],"cells":[[[[0]]]]},
    "jumps":[{"time":0.5,"pre":[[1]],"post":[[0]]}]}}"#;

#[test]
fn check_passes_and_fails() {
    let dir = TempDir::new().unwrap();
    let ok = glde(&["check", s(&example_config(&dir, "E4(1)"))]);
    assert_eq!(json_stdout(&ok)["passed"], true);
    let bad = glde(&["check", s(&write(&dir, "bad.json", SINGULAR))]);
    assert_eq!(code(&bad), 2);
    let missing = write(&dir, "missing.json", r#"{"dimension":1,"A":{"density":{"mesh":[0,1],"cells":[[[[0]]]]}}}"#);
    let out = glde(&["check", s(&missing)]);
    assert_eq!(code(&out), 64);
    assert!(String::from_utf8_lossy(&out.stderr).contains("period"));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&glde(&["simulate"])), 64);
    assert_eq!(code(&glde(&["check", "/nonexistent/system.json"])), 64);
    assert_eq!(code(&glde(&["frobnicate"])), 64);
    assert_eq!(code(&glde(&["--help"])), 0);
}

#[test]
fn simulate_decay() {
    let dir = TempDir::new().unwrap();
    let cfg = example_config(&dir, "E1");
    let out = glde(&["simulate", s(&cfg), "--t0", "0", "--t1", "1", "--x0", "1", "--samples", "11"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,side,x_1\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 11);
    assert!(r.iter().all(|(_, side, _)| side == "P"));
    assert!((r[10].2[0] - E.recip()).abs() < 1e-8);
}

#[test]
fn simulate_impulse_has_one_triple() {
    let dir = TempDir::new().unwrap();
    let cfg = example_config(&dir, "E6");
    let csv = dir.path().join("traj.csv");
    let out = glde(&["simulate", s(&cfg), "--x0", "0", "--samples", "5", "--out", s(&csv)]);
    assert_eq!(code(&out), 0);
    let r = rows(&fs::read_to_string(&csv).unwrap());
    let sides: Vec<&str> = r.iter().filter(|(t, _, _)| *t == 0.5).map(|(_, side, _)| side.as_str()).collect();
    assert_eq!(sides, ["L", "P", "R"]);
    assert_eq!(r.iter().filter(|(_, side, _)| side != "P").count(), 2);
}

#[test]
fn simulate_zero_stays_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = example_config(&dir, "E3");
    let out = glde(&["simulate", s(&cfg), "--x0", "0,0", "--t0", "-1", "--t1", "2"]);
    assert_eq!(code(&out), 0);
    let r = rows(&String::from_utf8(out.stdout).unwrap());
    assert!(r.iter().all(|(_, _, x)| x.iter().all(|v| *v == 0.0)));
    let wrong = glde(&["simulate", s(&cfg), "--x0", "1"]);
    assert_eq!(code(&wrong), 64);
    let bad = glde(&["simulate", s(&write(&dir, "bad.json", SINGULAR))]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn dichotomy_reports() {
    let dir = TempDir::new().unwrap();
    let e3 = json_stdout(&glde(&["dichotomy", s(&example_config(&dir, "E3"))]));
    assert_eq!(e3["classification"], "dichotomy");
    assert!((e3["alpha"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!(e3["audit_worst_ratio"].as_f64().unwrap() <= e3["K"].as_f64().unwrap() * 1.05);

    let e5 = example_config(&dir, "E5");
    assert_eq!(json_stdout(&glde(&["dichotomy", s(&e5)]))["classification"], "undecidable");
    let strict = json_stdout(&glde(&["dichotomy", s(&e5), "--eps-uc", "0"]));
    assert_eq!(strict["classification"], "no-dichotomy");
    assert!(strict["P"].is_null());

    let out = dir.path().join("e1.json");
    assert_eq!(code(&glde(&["dichotomy", s(&example_config(&dir, "E1")), "--out", s(&out)])), 0);
    let e1: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(e1["classification"], "dichotomy");
    assert_eq!(e1["P"], serde_json::json!([[1.0]]));
}

#[test]
fn periodic_impulsive() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("e6.json");
    assert_eq!(code(&glde(&["periodic", s(&example_config(&dir, "E6")), "--out", s(&out)])), 0);
    let doc: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let x0 = doc["x0"][0].as_f64().unwrap();
    assert!((x0 - (-0.5f64).exp() / (1.0 - E.recip())).abs() < 1e-6);
    assert!(doc["periodicity_residual"].as_f64().unwrap() <= 1e-6);
    for key in ["x0_alt", "representation_gap", "truncation_periods"] {
        assert!(!doc[key].is_null(), "{key}");
    }
    let r = rows(&fs::read_to_string(out.with_extension("csv")).unwrap());
    assert_eq!(r.first().unwrap().0, 0.0);
    assert_eq!(r.last().unwrap().0, 1.0);
}

#[test]
fn periodic_constant_forcing_is_zero() {
    let dir = TempDir::new().unwrap();
    let mut cfg = SystemConfig::from_system(&example("E6").unwrap().system);
    let f = cfg.f.as_mut().unwrap();
    f.base_value = vec![3.0];
    f.jumps.clear();
    f.periodic = true;
    let path = write(&dir, "const.json", &cfg.to_canonical_json());
    let doc = json_stdout(&glde(&["periodic", s(&path)]));
    assert_eq!(doc["x0"][0].as_f64().unwrap(), 0.0);
    assert!(doc["periodicity_residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn periodic_resonance_exits_3() {
    let dir = TempDir::new().unwrap();
    let sys = scalar_with_jump(0.0, 0.0).with_forcing(impulse_forcing(1.0)).unwrap();
    let path = write(&dir, "resonant.json", &SystemConfig::from_system(&sys).to_canonical_json());
    let out = glde(&["periodic", s(&path)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("resonant"));
}

#[test]
fn integrate_jump_only() {
    let dir = TempDir::new().unwrap();
    let c = 0.7;
    let text = format!(
        r#"{{"dimension":1,"period":1,
        "A":{{"density":{{"mesh":[0,1],"cells":[[[[0]]]]}},"jumps":[{{"time":0.5,"pre":[[0]],"post":[[{c}]]}}]}},
        "f":{{"periodic":false,"baseValue":[0],"density":{{"mesh":[0,1],"cells":[[[1]]]}}}}}}"#
    );
    let cfg = write(&dir, "ramp.json", &text);
    let doc = json_stdout(&glde(&["integrate", s(&cfg), "--a", "0", "--b", "1"]));
    assert!((doc["value"][0].as_f64().unwrap() - 0.5 * c).abs() < 1e-15);
    assert!(doc["gap"].as_f64().unwrap() <= 1e-6);
    let back = json_stdout(&glde(&["integrate", s(&cfg), "--a", "1", "--b", "0"]));
    assert_eq!(back["value"][0].as_f64().unwrap(), -doc["value"][0].as_f64().unwrap());
    assert_eq!(code(&glde(&["integrate", s(&cfg), "--a", "0", "--b", "nan"])), 64);

    let e1 = json_stdout(&glde(&["integrate", s(&example_config(&dir, "E1")), "--a", "0", "--b", "1"]));
    assert_eq!(e1["value"][0].as_f64().unwrap(), 0.0);
    assert_eq!(e1["oracle_value"][0].as_f64().unwrap(), 0.0);
}

#[test]
fn outputs_are_canonical() {
    let dir = TempDir::new().unwrap();
    let out = glde(&["dichotomy", s(&example_config(&dir, "E3"))]);
    let text = String::from_utf8(out.stdout).unwrap();
    let keys: Vec<&str> = ["K", "P", "alpha", "audit_worst_ratio", "classification", "eps_uc", "multipliers"].to_vec();
    let mut last = 0;
    for k in keys {
        let at = text.find(&format!("\"{k}\"")).unwrap();
        assert!(at >= last, "{k}");
        last = at;
    }
    assert!(text.contains("e-1") || text.contains("e0"));
}
