use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gausscouple::frbl::binary_entropy;
use gausscouple::oracles::grid_max_coupling_2x2;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gausscouple"))
        .args(args)
        .env_remove("GAUSSCOUPLE_SEED")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str], code: i32) -> Value {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "{args:?}\nstderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    validate(&report);
    report
}

fn validate(report: &Value) {
    let schema: Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json")).unwrap(),
    )
    .unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema errors: {errors:?}\n{report}");
}

fn real(v: &Value) -> f64 {
    match v {
        Value::String(s) if s == "inf" => f64::INFINITY,
        other => other.as_f64().unwrap_or_else(|| panic!("not a number: {other}")),
    }
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gausscouple-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn feasibility_exit_codes() {
    let r = run_ok(&["feasibility", path(&data("epi.json"))], 0);
    assert_eq!(r["result"]["scaling"], true);
    assert_eq!(r["result"]["dimension"], "pass");

    let r = run_ok(&["feasibility", path(&data("projection.json"))], 1);
    assert_eq!(r["result"]["dimension"], "fail");
    assert_eq!(r["result"]["witness_kind"], "coordinate");
    assert!((real(&r["result"]["violation"]) - 0.5).abs() < 1e-12);

    let bad = scratch("malformed.json", "{\"dims\": [1, 1], \"c\": [0.5,");
    let out = run(&["feasibility", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());

    let out = run(&["feasibility", path(&data("unknown_field.json"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("extra") && err.contains("line 2"), "{err}");

    let out = run(&["feasibility", path(&data("rank_deficient.json"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn max_coupling_examples() {
    let marg = data("marginals_1_4.json");
    let r = run_ok(&["max-coupling", path(&data("sum_free.json")), path(&marg)], 0);
    assert!((real(&r["result"]["value"]) - 9f64.ln()).abs() < 1e-8);

    let r = run_ok(&["max-coupling", path(&data("sum_budget.json")), path(&marg)], 0);
    let oracle = grid_max_coupling_2x2(1.0, 4.0, (1.0, 1.0), 1.0, 0.5 * 2f64.ln(), 200_000).unwrap();
    assert!((real(&r["result"]["value"]) - oracle).abs() < 1e-4);
    assert!((real(&r["result"]["value"]) - (5.0 + 2.0 * 2f64.sqrt()).ln()).abs() < 1e-8);
    assert_eq!(r["result"]["multipliers"][0]["subset"], serde_json::json!([1, 2]));

    let r = run_ok(&["max-coupling", path(&data("sum_free.json")), path(&marg), "--certify"], 0);
    assert!(real(&r["result"]["gap"]).abs() < 1e-6);

    // constrained problems have no dual certificate
    let out = run(&["max-coupling", path(&data("sum_budget.json")), path(&marg), "--certify"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn iteration_budget_reports_best_iterate() {
    let marg = data("marginals_1_4.json");
    let r = run_ok(
        &["max-coupling", path(&data("sum_budget.json")), path(&marg), "--max-iters", "3"],
        4,
    );
    assert_eq!(r["diagnostics"]["converged"], false);
    assert!(real(&r["result"]["value"]).is_finite());
}

#[test]
fn mismatched_marginals_are_rejected() {
    let m = scratch("three.json", r#"{"marginals": [{"dim": 1, "entries": [1]}, {"dim": 2, "entries": [1, 0, 0, 1]}]}"#);
    let out = run(&["max-coupling", path(&data("sum_free.json")), path(&m)]);
    assert_eq!(out.status.code(), Some(2));
    let m = scratch("indefinite.json", r#"{"marginals": [{"dim": 1, "entries": [1]}, {"dim": 1, "entries": [-1]}]}"#);
    let out = run(&["max-coupling", path(&data("sum_free.json")), path(&m)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constant_examples() {
    let epi = data("epi.json");
    let r = run_ok(&["constant", path(&epi), "--nu-from-datum"], 0);
    assert!((real(&r["result"]["value"]) + 0.5 * binary_entropy(0.5)).abs() < 1e-7);
    let r = run_ok(&["constant", path(&epi), "--c", "0.5,0.5"], 0);
    assert!((real(&r["result"]["value"]) + binary_entropy(0.5)).abs() < 1e-6);
    assert_eq!(r["result"]["status"], "finite");

    let r = run_ok(&["constant", path(&data("projection.json"))], 0);
    assert_eq!(r["result"]["status"], "infinite");
    assert_eq!(r["result"]["value"], "inf");
    assert_eq!(r["result"]["dimension_check"]["verdict"], "fail");

    let r = run_ok(&["constant", path(&epi), "--best-c"], 0);
    assert!((real(&r["result"]["value"]) + 2f64.ln()).abs() < 1e-6);
    assert!(real(&r["result"]["minimax"]["residual"]).abs() < 1e-4);

    let out = run(&["constant", path(&epi), "--best-c", "--nu-from-datum"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["constant", path(&epi), "--c", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn closed_form_commands() {
    let h = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    let hs = format!("{h}");
    let r = run_ok(&["depepi", "--n", "1", "--h1", &hs, "--h2", &hs, "--zeta", "0"], 0);
    let four_pi_e = 4.0 * std::f64::consts::PI * std::f64::consts::E;
    assert!((real(&r["result"]["bound_power"]) - four_pi_e).abs() < 1e-12 * four_pi_e);
    let r = run_ok(&["depepi", "--n", "1", "--h1", &hs, "--h2", &hs, "--zeta", "inf"], 0);
    assert!((real(&r["result"]["bound_power"]) - 2.0 * four_pi_e).abs() < 1e-9);

    let r = run_ok(&["saddle", "--n", "1", "--P", "1", "--N", "1", "--zeta", "0", "--trials", "20"], 0);
    // I(X; X + Z) for independent unit-power Gaussians
    let value = 0.5 * (1.0f64 + 1.0).ln();
    assert!((real(&r["result"]["value"]) - value).abs() < 1e-12);
    assert!((real(&r["result"]["value"]) - 0.34657).abs() < 1e-5);
    assert_eq!(r["result"]["deviation_test"]["passed"], true);
}

#[test]
fn bad_flags_exit_two() {
    for args in [
        vec!["depepi", "--n", "1", "--h1", "nan", "--h2", "1", "--zeta", "0"],
        vec!["depepi", "--n", "1", "--h1", "1", "--h2", "1", "--zeta", "-1"],
        vec!["saddle", "--n", "1", "--P", "0", "--N", "1", "--zeta", "0"],
        vec!["verify", "--profile", "nope"],
        vec!["frobnicate"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_gausscouple"))
        .args(["saddle", "--n", "1", "--P", "1", "--N", "1", "--zeta", "0", "--trials", "2"])
        .env("GAUSSCOUPLE_SEED", "seven")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let args = ["saddle", "--n", "2", "--P", "1", "--N", "2", "--zeta", "0.3", "--trials", "6", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);

    let from_env = Command::new(env!("CARGO_BIN_EXE_gausscouple"))
        .args(&args[..args.len() - 2])
        .env("GAUSSCOUPLE_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(a.stdout, from_env.stdout);

    // same datum with fields reordered and reformatted
    let shuffled = scratch(
        "epi_shuffled.json",
        r#"{"nu":[{"bound":0,"subset":[1,2]}],"maps":[{"entries":[1,1],"cols":2,"rows":1}],"d":[1],"c":[0.5,0.5],"dims":[1,1]}"#,
    );
    let x = run_ok(&["feasibility", path(&data("epi.json"))], 0);
    let y = run_ok(&["feasibility", path(&shuffled)], 0);
    assert_eq!(x["input_digest"], y["input_digest"]);
    let z = run_ok(&["feasibility", path(&data("epi.json")), "--seed", "1"], 0);
    assert_ne!(x["input_digest"], z["input_digest"]);
}

#[test]
fn floats_print_seventeen_digits() {
    let out = run(&["max-coupling", path(&data("sum_free.json")), path(&data("marginals_1_4.json"))]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"value\"")).unwrap();
    let number = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let mantissa = number.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{number}");
}

#[test]
fn verify_profiles() {
    for (profile, rows) in [("epi", 18), ("bm", 3), ("depepi-grid", 21), ("saddle-grid", 4)] {
        let r = run_ok(&["verify", "--profile", profile], 0);
        assert_eq!(r["result"]["failed"], 0, "{profile}");
        assert_eq!(r["result"]["checks"].as_array().unwrap().len(), rows);
    }
}

#[test]
fn verify_comparison_nongaussian() {
    let r = run_ok(&["verify", "--profile", "comparison-nongaussian", "--jobs", "2"], 0);
    let checks = r["result"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 15);
    for c in checks {
        assert!(real(&c["values"]["margin"]) >= -1e-3, "{c}");
    }
    assert_eq!(r["result"]["inconclusive"], 0);
}
