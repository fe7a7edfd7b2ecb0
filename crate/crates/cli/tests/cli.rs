use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kscert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kscert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON output")
}

#[test]
fn alpha_of_bbc21() {
    let o = kscert(&["alpha", "--set", "bbc21"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "36");
}

#[test]
fn kscolor_exit_codes() {
    let o = kscert(&["kscolor", "--set", "yo13"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("SAT"));
    let o = kscert(&["kscolor", "--set", "ceg18"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).starts_with("UNSAT"));
}

#[test]
fn yo13_certification_rejected() {
    let o = kscert(&["certify", "--set", "yo13", "--theta", "11.40", "--eps", "0", "--attest-full-rank", "--json"]);
    assert_eq!(code(&o), 2);
    let v = json(&o);
    assert_eq!(v["result"]["verdict"], "Rejected");
    let viol = &v["result"]["violations"][0];
    assert!((viol["lhs"].as_f64().unwrap() - 11.40).abs() < 1e-12);
    assert!((viol["rhs"].as_f64().unwrap() - (35.0 / 3.0 - 0.20808)).abs() < 1e-12);
}

#[test]
fn bbc21_certified_robust() {
    let o = kscert(&["certify", "--set", "bbc21", "--theta", "39.999", "--eps", "1e-3", "--attest-full-rank"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("CertifiedRobust"));
    let o = kscert(&["certify", "--set", "bbc21", "--theta", "39.999", "--eps", "1e-3"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("ConditionalRobust"));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&kscert(&["no-such-command"])), 1);
    assert_eq!(code(&kscert(&["alpha"])), 1);
    assert_eq!(code(&kscert(&["alpha", "--set", "nope"])), 1);
    assert_eq!(code(&kscert(&["lift"])), 1);
    assert_eq!(code(&kscert(&["certify", "--set", "peres33", "--theta", "13"])), 1);
    assert_eq!(code(&kscert(&["game", "--set", "ceg18"])), 1);
    assert_eq!(code(&kscert(&["--help"])), 0);
}

#[test]
fn json_carries_full_precision_and_echo() {
    let v = json(&kscert(&["theta", "--set", "yo13", "--json"]));
    let t = v["result"]["theta"].as_f64().unwrap();
    assert!((t - 11.977641).abs() < 1e-4);
    assert_eq!(v["echo"].as_str().unwrap(), format!("{t:.6}"));
    assert_eq!(v["command"], "theta");
}

#[test]
fn seeded_commands_are_reproducible() {
    for args in [
        &["simulate", "--set", "ceg18", "--seed", "9", "--shots", "5000", "--rotation", "0.01", "--readout-flip", "0.02"][..],
        &["robustness", "--set", "peres24", "--seed", "4", "--magnitudes", "1e-3,1e-2", "--json"][..],
        &["witness", "eval", "--set", "bbc21", "--state", "pure", "--seed", "2", "--json"][..],
    ] {
        let a = kscert(args);
        let b = kscert(args);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn thread_cap_does_not_change_results() {
    let args = ["simulate", "--set", "peres24", "--seed", "5", "--shots", "20000"];
    let a = kscert(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_kscert"))
        .args(args)
        .env("KSCERT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn simulate_then_certify() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    let s = stats.to_str().unwrap();
    let o = kscert(&["simulate", "--set", "ceg18", "--seed", "1", "--shots", "100000", "--out", s]);
    assert_eq!(code(&o), 0);
    let counts: Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(counts["shots"], 100000);
    assert!(counts["pairs"]["0,1"]["11"].is_u64());
    let o = kscert(&["certify", "--set", "ceg18", "--stats", s, "--attest-full-rank"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("CertifiedIdeal"));

    let noisy = dir.path().join("noisy.json");
    let n = noisy.to_str().unwrap();
    kscert(&["simulate", "--set", "ceg18", "--seed", "1", "--rotation", "0.05", "--out", n]);
    assert_eq!(code(&kscert(&["certify", "--set", "ceg18", "--stats", n, "--attest-full-rank"])), 2);
}

#[test]
fn file_input_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("ceg18.json");
    let path = f.to_str().unwrap();
    assert_eq!(code(&kscert(&["catalog", "show", "--set", "ceg18", "--out", path])), 0);
    let o = kscert(&["alpha", "--file", path]);
    assert_eq!(stdout(&o).trim(), "4");
    let o = kscert(&["equiv", path, "ceg18"]);
    assert_eq!(stdout(&o).trim(), "Unitary");
    assert_eq!(code(&kscert(&["alpha", "--file", "/nonexistent.json"])), 1);
}

#[test]
fn equivalence_verdicts() {
    assert_eq!(stdout(&kscert(&["equiv", "bbc21", "bbc21-conj"])).trim(), "Antiunitary");
    assert_eq!(stdout(&kscert(&["equiv", "peres33", "peres33-alt"])).trim(), "Inequivalent");
}

#[test]
fn game_and_lift() {
    let v = json(&kscert(&["game", "--set", "peres24", "--json"]));
    let r = &v["result"];
    assert!((r["quantum"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(r["classical"]["value"].as_f64().unwrap() < 1.0);
    assert_eq!(r["selftest_phi_plus"]["pass"], true);
    let v = json(&kscert(&["lift", "--dim", "5", "--json"]));
    assert_eq!(v["result"]["set"]["vectors"].as_array().unwrap().len(), 39);
}

#[test]
fn report_matches_schema() {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let o = kscert(&["report", "--quick", "--json", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    let names: Vec<&str> = v["result"]["sets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["bbc21", "ceg18", "peres24", "yo13", "peres39", "peres33"]);

    let mut broken = v.clone();
    broken["result"]["sets"][0]["ks"] = Value::from("MAYBE");
    assert!(!validator.is_valid(&broken));
}
