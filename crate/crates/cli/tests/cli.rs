use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const LGT0: &str = r#"{"f": "x^2", "g": "2*(2+t)^-2", "xi": 1, "beta": 2, "theta": 2}"#;
const G0: &str = r#"{"f": "x^2", "g": "(1+t)^-2*((1+t)^-1 + t)^-2", "xi": 1}"#;
const LINFTY: &str =
    r#"{"f": "x^2", "g": "(1+t)^-1*(1 - 0.5*(1+t)^-0.5)", "xi": 1, "horizon": 1e9}"#;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl From<Output> for Run {
    fn from(o: Output) -> Self {
        Run {
            code: o.status.code().expect("process exited normally"),
            stdout: String::from_utf8(o.stdout).unwrap(),
            stderr: String::from_utf8(o.stderr).unwrap(),
        }
    }
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{}: {}", e, self.stdout))
    }
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rvdecay"));
    c.env_remove("RVDECAY_MAX_STEPS");
    c
}

fn run(args: &[&str]) -> Run {
    bin().args(args).output().unwrap().into()
}

fn config(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, json).unwrap();
    p
}

fn with_config(cmd: &str, path: &Path, extra: &[&str]) -> Run {
    let mut args = vec![cmd, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn row<'a>(v: &'a Value, functional: &str) -> &'a Value {
    v["table"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["functional"] == functional)
        .unwrap_or_else(|| panic!("no row {}", functional))
}

#[test]
fn classify_critical_example() {
    let d = TempDir::new().unwrap();
    let r = with_config("classify", &config(&d, "c.json", LGT0), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_eq!(v["regime"], "Critical");
    assert!((v["lambda_star"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!((v["L_value"].as_f64().unwrap() - 2.0).abs() < 1e-4);
}

#[test]
fn negative_perturbation_is_out_of_scope() {
    let d = TempDir::new().unwrap();
    let p = config(&d, "c.json", r#"{"f": "x^2", "g": "-(1+t)^-2", "xi": 1}"#);
    let r = with_config("classify", &p, &[]);
    assert_eq!(r.code, 2);
    let v = r.json();
    assert_eq!(v["regime"], "Rejected");
    assert!(v["reason"]
        .as_str()
        .unwrap()
        .starts_with("g must be positive (or fully reflectable)"));
    assert!(r.stderr.contains("g must be positive"));
}

#[test]
fn index_one_is_out_of_scope() {
    let d = TempDir::new().unwrap();
    let p = config(&d, "c.json", r#"{"f": "x", "g": "(1+t)^-2", "xi": 0.5}"#);
    let r = with_config("classify", &p, &[]);
    assert_eq!(r.code, 2);
    assert!(r.json()["reason"].as_str().unwrap().contains("β > 1"));
}

#[test]
fn config_errors_name_the_field() {
    let d = TempDir::new().unwrap();
    for (json, field) in [
        (r#"{"f": "x^2", "g": "2*(2+", "xi": 1}"#, "`g`"),
        (r#"{"f": "x^2 + 1", "g": "1", "xi": 1}"#, "`f`"),
        (
            r#"{"f": "x^2", "g": "1", "xi": 1, "tolerances": {"atol": -1}}"#,
            "`tolerances.atol`",
        ),
        (
            r#"{"f": "x^2", "g": "1", "xi": 1, "horizon": 1e-3}"#,
            "`horizon`",
        ),
        (
            r#"{"f": "x^2", "g": "1", "xi": 1, "grids": {"t0": 0}}"#,
            "`grids.t0`",
        ),
        (r#"{"f": "x^2", "g": "1"}"#, "`xi`"),
    ] {
        let r = with_config("classify", &config(&d, "c.json", json), &[]);
        assert_eq!(r.code, 1, "{}", json);
        assert!(r.stderr.contains(field), "{}: {}", json, r.stderr);
        assert!(r.stdout.is_empty());
    }
    let r = with_config("classify", &d.path().join("missing.json"), &[]);
    assert_eq!(r.code, 1);
}

#[test]
fn flags_override_config_values() {
    let d = TempDir::new().unwrap();
    let p = config(&d, "c.json", LGT0);
    let r = with_config("simulate", &p, &["--horizon", "10", "--rtol", "1e-6"]);
    assert_eq!(r.code, 0);
    let last = r.stdout.lines().last().unwrap();
    assert!(last.starts_with("1.0000000000000000e1,"), "{}", last);
}

#[test]
fn simulate_matches_closed_form() {
    let d = TempDir::new().unwrap();
    let r = with_config("simulate", &config(&d, "g0.json", G0), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let mut lines = r.stdout.lines();
    assert_eq!(lines.next(), Some("t,x"));
    let last: Vec<f64> = lines
        .last()
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(last[0], 1e6);
    let exact = 1.0 / (1.0 / (1.0 + last[0]) + last[0]);
    assert!(
        (last[1] - exact).abs() <= 1e-6 * exact,
        "{} vs {}",
        last[1],
        exact
    );
}

#[test]
fn simulate_diagnostics_columns() {
    let d = TempDir::new().unwrap();
    let p = config(&d, "c.json", LGT0);
    let r = with_config("simulate", &p, &["--diagnostics", "--horizon", "100"]);
    assert_eq!(r.code, 0);
    let mut lines = r.stdout.lines();
    assert_eq!(lines.next(), Some("t,x,F_of_x,f_of_x,g_of_t"));
    for line in lines.skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        // F(x(t)) = t/2 for this solution.
        assert!(
            (v[2] - 0.5 * v[0]).abs() <= 1e-7 * v[0].max(1.0),
            "{}",
            line
        );
        assert!((v[3] - v[1] * v[1]).abs() <= 1e-15);
        assert!((v[4] - 2.0 / ((2.0 + v[0]) * (2.0 + v[0]))).abs() <= 1e-15);
    }
}

#[test]
fn simulate_rejects_zero_perturbation() {
    let d = TempDir::new().unwrap();
    let p = config(
        &d,
        "c.json",
        r#"{"f": "x^2", "g": "0", "xi": 1, "horizon": 100}"#,
    );
    let r = with_config("simulate", &p, &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("g must be positive"));
    assert!(r.stderr.contains("--unperturbed"));
    assert!(r.stdout.is_empty());

    let r = with_config("simulate", &p, &["--unperturbed"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    for line in r.stdout.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let y = 1.0 / (1.0 + v[0]);
        assert!((v[1] - y).abs() <= 1e-8 * y, "{}", line);
    }
}

#[test]
fn simulate_json_output_to_file() {
    let d = TempDir::new().unwrap();
    let p = config(&d, "c.json", LGT0);
    let out = d.path().join("traj.json");
    let r = with_config(
        "simulate",
        &p,
        &[
            "--horizon",
            "10",
            "--format",
            "json",
            "--output",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(r.code, 0);
    assert!(r.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["termination"], "horizon");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["t"], 0.0);
    assert_eq!(rows[0]["x"], 1.0);
}

#[test]
fn step_budget_from_environment() {
    let d = TempDir::new().unwrap();
    let p = config(&d, "c.json", LGT0);
    let r: Run = bin()
        .args(["simulate", "--config", p.to_str().unwrap()])
        .env("RVDECAY_MAX_STEPS", "10")
        .output()
        .unwrap()
        .into();
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("step budget"));

    let r: Run = bin()
        .args(["classify", "--config", p.to_str().unwrap()])
        .env("RVDECAY_MAX_STEPS", "many")
        .output()
        .unwrap()
        .into();
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("RVDECAY_MAX_STEPS"));
}

#[test]
fn verify_dominated_ratio() {
    let d = TempDir::new().unwrap();
    let r = with_config("verify", &config(&d, "c.json", LINFTY), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_eq!(v["classification"]["regime"], "Dominated");
    let lim = row(&v, "f(x)/g")["empirical"].as_f64().unwrap();
    assert!((lim - 1.0).abs() <= 0.02, "{}", lim);
    assert_eq!(v["passed"], true);
}

#[test]
fn verify_critical_rate_constant() {
    let d = TempDir::new().unwrap();
    let p = config(&d, "c.json", r#"{"f": "x^2", "g": "2*(1+t)^-2", "xi": 1}"#);
    let r = with_config("verify", &p, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    let lim = row(&v, "F(x)/t")["empirical"].as_f64().unwrap();
    assert!((lim - 0.5).abs() <= 0.01, "{}", lim);
}

#[test]
fn verify_preserved_rate() {
    let d = TempDir::new().unwrap();
    let r = with_config("verify", &config(&d, "c.json", G0), &["--format", "csv"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let first = r.stdout.lines().nth(1).unwrap();
    let cells: Vec<&str> = first.split(',').collect();
    assert_eq!(cells[0], "F(x)/t");
    let lim: f64 = cells[2].parse().unwrap();
    assert!((lim - 1.0).abs() <= 0.01, "{}", lim);
    assert_eq!(cells[5], "pass");
}

#[test]
fn verify_rejected_input_exits_two() {
    let d = TempDir::new().unwrap();
    let p = config(&d, "c.json", r#"{"f": "x^2", "g": "-(1+t)^-2", "xi": 1}"#);
    let r = with_config("verify", &p, &[]);
    assert_eq!(r.code, 2);
    assert!(r.json()["trajectory"].is_null());
}

#[test]
fn corpus_all_passes() {
    let r = run(&["corpus", "--all"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    let names: Vec<&str> = v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(names.len(), 9);
}

#[test]
fn corpus_single_entry() {
    let r = run(&["corpus", "--entry", "gneg"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_eq!(v["entries"].as_array().unwrap().len(), 1);
    assert_eq!(v["entries"][0]["regime"], "Rejected");
}

#[test]
fn corpus_unknown_entry_lists_names() {
    let r = run(&["corpus", "--entry", "nonexistent"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("nonexistent"));
    assert!(r.stderr.contains("gneg") && r.stderr.contains("Linfty"));
    assert_eq!(run(&["corpus"]).code, 1);
    assert_eq!(run(&["corpus", "--all", "--entry", "g0"]).code, 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["bogus"]).code, 1);
    assert_eq!(run(&["classify"]).code, 1);
    assert_eq!(
        run(&["classify", "--config", "x", "--format", "xml"]).code,
        1
    );
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn indices_report_both_sides() {
    let d = TempDir::new().unwrap();
    let r = with_config("indices", &config(&d, "c.json", LGT0), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert!((v["f_at_zero"]["estimate"]["index"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((v["g_at_infinity"]["estimate"]["index"].as_f64().unwrap() + 2.0).abs() < 1e-4);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let d = TempDir::new().unwrap();
    let p = config(&d, "c.json", LGT0);
    for args in [
        vec!["classify"],
        vec!["simulate", "--diagnostics"],
        vec!["verify"],
        vec!["indices", "--format", "csv"],
    ] {
        let outs: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                bin()
                    .args(&args)
                    .args(["--config", p.to_str().unwrap()])
                    .output()
                    .unwrap()
                    .stdout
            })
            .collect();
        assert!(!outs[0].is_empty());
        assert_eq!(outs[0], outs[1], "{:?}", args);
    }
    let a = run(&[
        "corpus", "--entry", "Lgt0", "--entry", "g0", "--format", "csv",
    ])
    .stdout;
    let b = run(&[
        "corpus", "--entry", "g0", "--entry", "Lgt0", "--format", "csv",
    ])
    .stdout;
    assert_eq!(a, b);
}
