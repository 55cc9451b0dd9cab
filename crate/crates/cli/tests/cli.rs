use std::path::Path;
use std::process::{Command, Output};

fn mnlmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mnlmix"))
        .args(args)
        .env_remove("MNLMIX_DEFAULT_SEED")
        .output()
        .expect("spawn mnlmix")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is json")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn simulate_is_deterministic() {
    let a = mnlmix(&["simulate", "--n", "5", "--seed", "11"]);
    let b = mnlmix(&["simulate", "--n", "5", "--seed", "11"]);
    let c = mnlmix(&["simulate", "--n", "5", "--seed", "12"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let v = json(&a);
    assert_eq!(v["n"], 5);
    assert_eq!(v["a"].as_array().unwrap().len(), 5);
}

#[test]
fn default_seed_comes_from_the_environment() {
    let explicit = mnlmix(&["simulate", "--seed", "42"]);
    let env = Command::new(env!("CARGO_BIN_EXE_mnlmix"))
        .args(["simulate"])
        .env("MNLMIX_DEFAULT_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(explicit.stdout, env.stdout);
}

#[test]
fn lambda_and_mu_conflict() {
    let o = mnlmix(&["simulate", "--lambda", "2", "--mu", "0.3"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn mu_is_converted_to_lambda() {
    let o = mnlmix(&["simulate", "--mu", "0.25", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let l = json(&o)["lambda"].clone();
    let l = l.as_f64().or_else(|| l.as_str().and_then(|s| s.parse().ok())).unwrap();
    assert!((l - 3.0).abs() < 1e-12);
}

#[test]
fn simulate_writes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = mnlmix(&[
        "simulate", "--seed", "4", "--samples", "200", "--slate", "1,2,3", "--slate", "1,2,3,4",
        "--samples-out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let slates = s["slates"].as_array().unwrap();
    assert_eq!(slates.len(), 2);
    for row in slates {
        let total: u64 = row["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
        assert_eq!(total, 200);
    }
}

#[test]
fn identify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let generic = String::from_utf8(mnlmix(&["simulate", "--seed", "7"]).stdout).unwrap();
    let generic = write(dir.path(), "g.json", &generic);
    assert_eq!(code(&mnlmix(&["identify", &generic])), 0);

    let ce = String::from_utf8(mnlmix(&["simulate", "--model", "counterexample"]).stdout).unwrap();
    let ce = write(dir.path(), "c.json", &ce);
    let o = mnlmix(&["identify", "--exact", &ce]);
    assert_eq!(code(&o), 2);
    let v = json(&o);
    let sols = v["exact_pair_solutions"].as_array().unwrap();
    assert_eq!(sols.len(), 2);

    let collapsed = write(
        dir.path(),
        "k.json",
        r#"{"n": 4, "lambda": "2", "a": ["1/4","1/4","1/4","1/4"], "b": ["1/4","1/4","1/4","1/4"]}"#,
    );
    assert_eq!(code(&mnlmix(&["identify", &collapsed])), 3);

    let missing = dir.path().join("nope.json");
    assert_eq!(code(&mnlmix(&["identify", missing.to_str().unwrap()])), 1);
}

#[test]
fn learn_from_oracle_recovers_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let m = String::from_utf8(mnlmix(&["simulate", "--n", "7", "--seed", "7"]).stdout).unwrap();
    let m = write(dir.path(), "m.json", &m);
    let o = mnlmix(&["learn", &m]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(v["max_rel_error"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["queries"].as_u64().unwrap(), 17 + 3 * 7);
}

#[test]
fn reproduction_experiments_match() {
    let o = mnlmix(&["experiment", "three-roots"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["matches"], true);
    let o = mnlmix(&["experiment", "counterexample"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["exact_ok"], true);
    assert_eq!(v["double_ok"], true);
}

#[test]
fn empty_sweep_succeeds() {
    let o = mnlmix(&["experiment", "identifiability-sweep", "--trials", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["unique"], 0);
}

#[test]
fn small_sweep_reports_counts() {
    let o = mnlmix(&["experiment", "identifiability-sweep", "--trials", "5", "--seed", "1"]);
    let v = json(&o);
    let total: u64 = ["unique", "full_non_unique", "collapsed", "errors"]
        .iter()
        .map(|k| v[k].as_u64().unwrap())
        .sum();
    assert_eq!(total, 5);
}

#[test]
fn sample_complexity_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let report = dir.path().join("r.json");
    let o = mnlmix(&[
        "experiment", "sample-complexity", "--n", "4", "--eps", "0.2", "--trials", "2", "--refine", "1",
        "--out", csv.to_str().unwrap(), "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("n_star"));
    assert_eq!(lines.count(), 1);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(r["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&mnlmix(&["--help"])), 0);
    assert_eq!(code(&mnlmix(&["frobnicate"])), 1);
}
