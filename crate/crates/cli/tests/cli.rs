use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bitension"));
    c.env_remove("BITENSION_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn catalog_cases_pass() {
    let out = run(&["catalog", "list"]);
    assert_eq!(out.status.code(), Some(0));
    let listing = String::from_utf8(out.stdout).unwrap();
    for name in ["h5_inclusion", "s5_stereographic", "cylinder_family", "r2_wrap_r3", "r2_wrap_r6", "plane_inclusion", "identity"] {
        assert!(listing.contains(name));
        let out = run(&["catalog", "verify", name, "--samples", "16"]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn report_schema() {
    let out = run(&["catalog", "verify", "h5_inclusion", "--format", "json", "--samples", "8"]);
    let v = json(&out);
    for key in ["version", "case", "seed", "samples", "checks", "pass"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["seed"], 20_240_601);
    assert_eq!(v["samples"], 8);
    for c in v["checks"].as_array().unwrap() {
        for key in ["name", "max_abs", "max_norm", "tol", "pass", "worst_point"] {
            assert!(c.get(key).is_some(), "check missing {key}");
        }
        assert_eq!(c["worst_point"].as_array().unwrap().len(), 4);
    }
}

#[test]
fn text_and_json_carry_identical_numbers() {
    let args = ["catalog", "verify", "r2_wrap_r3", "--samples", "12", "--seed", "5"];
    let text = String::from_utf8(run(&args).stdout).unwrap();
    let v = json(&run(&[&args[..], &["--format", "json"]].concat()));
    for c in v["checks"].as_array().unwrap() {
        let name = c["name"].as_str().unwrap();
        let line = text.lines().find(|l| l.split_whitespace().nth(1) == Some(name)).unwrap();
        for key in ["max_abs", "max_norm", "tol"] {
            let words: Vec<&str> = line.split_whitespace().collect();
            let i = words.iter().position(|w| *w == key).unwrap();
            let parsed: f64 = words[i + 1].parse().unwrap();
            assert_eq!(parsed, c[key].as_f64().unwrap(), "{name} {key}");
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let args = ["catalog", "verify", "s5_stereographic", "--format", "json", "--samples", "20", "--seed", "9"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let other = run(&["catalog", "verify", "s5_stereographic", "--format", "json", "--samples", "20", "--seed", "10"]);
    assert_ne!(run(&args).stdout, other.stdout);
}

#[test]
fn seed_precedence() {
    let env_only = bin()
        .env("BITENSION_SEED", "77")
        .args(["catalog", "verify", "plane_inclusion", "--format", "json", "--samples", "4"])
        .output()
        .unwrap();
    assert_eq!(json(&env_only)["seed"], 77);
    let flag = bin()
        .env("BITENSION_SEED", "77")
        .args(["catalog", "verify", "plane_inclusion", "--format", "json", "--samples", "4", "--seed", "3"])
        .output()
        .unwrap();
    assert_eq!(json(&flag)["seed"], 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seeded.toml");
    let src = std::fs::read_to_string(config("h5_inclusion.toml")).unwrap().replace("samples = 64", "samples = 4\nseed = 11");
    std::fs::write(&path, src).unwrap();
    let p = path.to_str().unwrap();
    let from_config = bin().env("BITENSION_SEED", "77").args(["custom", "verify", "--config", p, "--format", "json"]).output().unwrap();
    assert_eq!(json(&from_config)["seed"], 11);
    assert_eq!(json(&from_config)["samples"], 4);
    let bad = bin().env("BITENSION_SEED", "many").args(["catalog", "verify", "plane_inclusion"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["catalog", "verify", "no_such_case"]).status.code(), Some(2));
    assert_eq!(run(&["catalog", "verify", "r2_wrap_r3", "--param", "Q=1"]).status.code(), Some(2));
    assert_eq!(run(&["catalog", "verify", "r2_wrap_r3", "--param", "R=-1"]).status.code(), Some(2));
    assert_eq!(run(&["check-transform", "--law", "tension", "--dims", "7,3"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["custom", "verify", "--config", "/nonexistent.toml"]).status.code(), Some(2));
}

#[test]
fn unbound_config_parameter_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let src = std::fs::read_to_string(config("r2_wrap_r3.toml")).unwrap().replace("exp(y/R)", "exp(y/Rad)");
    std::fs::write(&path, src).unwrap();
    let out = run(&["custom", "verify", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("`Rad`"), "{err}");
    assert!(err.contains("bad.toml:"), "{err}");
}

#[test]
fn domain_violation_exits_four() {
    let out = run(&["cylinder", "solve", "--radius", "1", "--c1", "4", "--c2", "1", "--sign", "+"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("not positive"));
    let out = run(&["catalog", "verify", "cylinder_family", "--param", "C1=4", "--param", "C2=1"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn impossible_tolerance_fails() {
    let out = run(&["catalog", "verify", "r2_wrap_r3", "--tol", "1e-20"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["catalog", "verify", "r2_wrap_r3", "--tol", "1e-20", "--format", "json"]);
    let v = json(&out);
    assert_eq!(v["pass"], false);
    let bit = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "bitension").unwrap();
    assert_eq!(bit["pass"], false);
    assert_eq!(bit["tol"].as_f64(), Some(1e-20));
}

#[test]
fn config_reproduces_catalog() {
    for name in ["h5_inclusion", "s5_stereographic", "cylinder_family", "r2_wrap_r3", "plane_inclusion", "identity"] {
        let cat = json(&run(&["catalog", "verify", name, "--format", "json", "--samples", "16"]));
        let file = config(&format!("{name}.toml"));
        let cus = json(&run(&["custom", "verify", "--config", &file, "--format", "json", "--samples", "16"]));
        assert_eq!(cat["pass"], cus["pass"], "{name}");
        for c in cus["checks"].as_array().unwrap() {
            let same = cat["checks"].as_array().unwrap().iter().find(|d| d["name"] == c["name"]).unwrap();
            assert_eq!(same["pass"], c["pass"], "{name} {}", c["name"]);
            let (a, b) = (same["max_abs"].as_f64().unwrap(), c["max_abs"].as_f64().unwrap());
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{name} {}: {a} vs {b}", c["name"]);
        }
    }
}

#[test]
fn check_transform_laws() {
    for law in ["tension", "jacobi", "bitension"] {
        for dims in ["2,3", "5,6"] {
            let out = run(&["check-transform", "--law", law, "--dims", dims, "--cases", "10", "--format", "json"]);
            assert_eq!(out.status.code(), Some(0), "{law} {dims}");
            let v = json(&out);
            assert_eq!(v["samples"], 10);
            assert!(v["checks"][0]["max_abs"].as_f64().unwrap() < 1e-7);
        }
    }
}

#[test]
fn cylinder_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.csv");
    let out = run(&[
        "cylinder", "solve", "--radius", "2", "--c1", "-1", "--c2", "2", "--sign", "-", "--z0", "-1", "--z1", "1.5",
        "--steps", "200", "--emit-csv", path.to_str().unwrap(), "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["z", "lambda_sq_closed", "lambda_sq_rk4", "first_integral_drift"]);
    let rows: Vec<Vec<f64>> =
        reader.records().map(|r| r.unwrap().iter().map(|f| f.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[0][0], -1.0);
    assert_eq!(rows[200][0], 1.5);
    let dev = rows.iter().map(|r| (r[1] - r[2]).abs()).fold(0.0, f64::max);
    let reported = v["checks"][0]["max_abs"].as_f64().unwrap();
    assert!(dev < 1e-8 && (dev - reported).abs() <= 1e-15 * (1.0 + reported), "{dev} vs {reported}");
    for r in &rows {
        let lambda_sq = (2.0 * (-r[0] / 2.0).exp() + 0.5 * 4.0 * (r[0] / 2.0).exp()) / 2.0;
        assert!((r[1] - lambda_sq).abs() < 1e-12 * lambda_sq, "z = {}", r[0]);
    }
}

#[test]
fn weierstrass_verdicts() {
    let cases = [("r2_wrap_r3", "proper biharmonic"), ("r2_wrap_r6", "proper biharmonic"), ("plane_inclusion", "harmonic")];
    for (case, verdict) in cases {
        let out = run(&["weierstrass", "check", "--case", case, "--samples", "16", "--format", "json"]);
        assert_eq!(out.status.code(), Some(0), "{case}");
        let v = json(&out);
        assert_eq!(v["verdict"], verdict, "{case}");
        let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
        assert!(names.contains(&"w3"));
    }
    let out = run(&["weierstrass", "check", "--config", &config("r2_wrap_r3.toml"), "--samples", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["weierstrass", "check", "--case", "h5_inclusion"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}
