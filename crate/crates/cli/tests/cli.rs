use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn sjq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sjq"))
        .args(args)
        .env_remove("SJQ_THREADS")
        .output()
        .expect("sjq runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn rotation_fixture_has_unit_theta() {
    let out = sjq(&["decompose", "--input", fixture("rotation.csv").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["thetas"], serde_json::json!([1.0]));
    assert_eq!(r["lambda"][0]["hbar"], 1.0);
    assert_eq!(r["lambda"][0]["value"], 1.0);
    assert_eq!(r["lambda"].as_array().unwrap().len(), 17);
}

#[test]
fn chain_edge_list_restricts_to_even_rank() {
    let out = sjq(&["decompose", "--input", fixture("chain10.txt").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["source"]["kind"], "causal_set");
    assert_eq!(r["restriction"]["elements"], 10);
    assert_eq!(r["restriction"]["relations"], 45);
    assert_eq!(r["restriction"]["rank"].as_u64().unwrap() % 2, 0);
    assert!(r["restriction"]["convention"]["kind"].is_string());
}

#[test]
fn input_errors_exit_with_two() {
    let out = sjq(&["decompose", "--input", "/definitely/not/here.csv"]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not/here.csv"));

    let sym = sjq(&["decompose", "--input", fixture("symmetric.csv").to_str().unwrap()]);
    assert_eq!(code(&sym), 2);
    assert!(String::from_utf8_lossy(&sym.stderr).contains("antisymmetric"));

    assert_eq!(code(&sjq(&["suite", "--cutoff", "2"])), 2);
    assert_eq!(code(&sjq(&["suite", "--tol", "-1"])), 2);
    assert_eq!(code(&sjq(&["sj-check", "--perturb", "-0.1"])), 2);
}

#[test]
fn perturbation_breaks_purity_but_not_positivity() {
    let input = fixture("rotation.csv");
    let base = json(&sjq(&["sj-check", "--input", input.to_str().unwrap()]));
    let zero = sjq(&["sj-check", "--input", input.to_str().unwrap(), "--perturb", "0"]);
    assert_eq!(code(&zero), 0);
    let zero = json(&zero);
    assert_eq!(zero["summary"], base["summary"]);
    assert_eq!(zero["summary"]["is_pure"], true);
    assert!(zero["summary"]["purity"].as_f64().unwrap() < 1e-10);

    let bad = sjq(&["sj-check", "--input", input.to_str().unwrap(), "--perturb", "1e-3"]);
    assert_eq!(code(&bad), 1);
    let bad = json(&bad);
    let failures: Vec<&str> = bad["failures"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(failures.contains(&"purity"));
    assert!(!failures.contains(&"positivity"));
    assert!(bad["summary"]["positivity"].as_f64().unwrap() > 0.0);
}

#[test]
fn state_eval_rows() {
    let out = sjq(&["state-eval", "--phi", fixture("phi.txt").to_str().unwrap(), "--hbar-grid", "1:2^-4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5 * 4);
    for r in &rows {
        let hbar: f64 = r[col("hbar")].parse().unwrap();
        let norm_sq: f64 = r[col("norm_sq")].parse().unwrap();
        let fock: f64 = r[col("fock_re")].parse().unwrap();
        assert!((fock - (-hbar * norm_sq / 2.0).exp()).abs() < 1e-8);
        assert_eq!(&r[col("status")], "ok");
        if r[col("phi_index")] == *"0" {
            assert_eq!(&r[col("closed_form")], "1.0");
            assert_eq!(fock, 1.0);
        }
    }
}

#[test]
fn state_eval_on_two_modes_and_mismatched_input() {
    let phi = fixture("phi_two_modes.txt");
    let out = sjq(&["state-eval", "--phi", phi.to_str().unwrap(), "--hbar-grid", "0.5", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["source"]["modes"], 2);
    assert_eq!(r["rows"][0]["cutoff"], 31);

    let wrong = sjq(&["state-eval", "--phi", phi.to_str().unwrap(), "--input", fixture("rotation.csv").to_str().unwrap()]);
    assert_eq!(code(&wrong), 2);
}

#[test]
fn suite_passes_by_default_and_fails_when_tightened() {
    let out = sjq(&["suite"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["checks_total"], 15);
    assert_eq!(r["checks_passed"], 15);
    assert_eq!(r["input"]["source"]["kind"], "rotation_fixture");

    let tight = sjq(&["suite", "--tol", "1e-16"]);
    assert_eq!(code(&tight), 1);
    let t = json(&tight);
    assert_eq!(t["passed"], false);
    assert!(t["checks_passed"].as_u64().unwrap() < 15);
}

#[test]
fn seeded_sprinkle_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = sjq(&["decompose", "--sprinkle", "100", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    let first = std::fs::read(a.path().join("decompose.json")).unwrap();
    assert_eq!(first, std::fs::read(b.path().join("decompose.json")).unwrap());
    let r: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(r["source"], serde_json::json!({"kind": "sprinkle", "density": 100.0, "seed": 7}));

    let other = sjq(&["decompose", "--sprinkle", "100", "--seed", "8"]);
    assert_ne!(other.stdout, first);
}

#[test]
fn thread_cap_does_not_change_output() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_sjq"))
            .args(["state-eval", "--phi", fixture("phi.txt").to_str().unwrap()])
            .env("SJQ_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, run("3").stdout);
    assert_eq!(code(&run("zero")), 2);
}
