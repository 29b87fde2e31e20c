use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_steerlab"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_config(cmd: &str, name: &str, extra: &[&str]) -> (i32, Value) {
    let cfg = config(name);
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = run(&args);
    let code = out.status.code().expect("exit code");
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, json)
}

fn write_temp(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn matrix(v: &Value) -> Vec<Vec<(f64, f64)>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|row| {
            row.as_array()
                .unwrap()
                .iter()
                .map(|z| (z[0].as_f64().unwrap(), z[1].as_f64().unwrap()))
                .collect()
        })
        .collect()
}

fn all_checks_pass(r: &Value) -> bool {
    r["checks"].as_array().unwrap().iter().all(|c| c["passed"] == Value::Bool(true))
}

#[test]
fn steer_phi_plus_two_projectors() {
    let (code, r) = run_config("steer", "steer_phi_plus.json", &[]);
    assert_eq!(code, 0);
    assert_eq!(r["passed"], true);
    for c in r["checks"].as_array().unwrap() {
        assert!(c["value"].as_f64().unwrap() <= 1e-9, "{c}");
    }
    // Φ+ transfers Bob's |k⟩⟨k| to Alice: A_k = |k⟩⟨k| ⊗ I.
    let elements = r["povm"]["elements"].as_array().unwrap();
    assert_eq!(elements.len(), 2);
    for (k, e) in elements.iter().enumerate() {
        let m = matrix(&e["matrix"]);
        for (i, row) in m.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                let want = if i == j && i / 2 == k { 1.0 } else { 0.0 };
                assert!((z.0 - want).abs() < 1e-9 && z.1.abs() < 1e-9, "A_{k}[{i}][{j}] = {z:?}");
            }
        }
    }
    assert_eq!(r["instrument"]["outcomes"].as_array().unwrap().len(), 2);
}

#[test]
fn steer_barycenter_mismatch_exits_nonzero() {
    let cfg = config("steer_mismatch.json");
    let out = run(&["steer", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("barycenter mismatch"), "{err}");
    assert!(err.contains("residual 4.000e-1"), "{err}");
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["passed"], false);
    assert!(r["error"].as_str().unwrap().contains("barycenter mismatch"));
}

#[test]
fn steer_bloch_circle_sums_to_cyclic_projection() {
    let (code, r) = run_config("steer", "steer_bloch.json", &[]);
    assert_eq!(code, 0);
    let elements = r["povm"]["elements"].as_array().unwrap();
    assert_eq!(elements.len(), 32);
    let mut sum = vec![vec![(0.0, 0.0); 4]; 4];
    for e in elements {
        for (i, row) in matrix(&e["matrix"]).iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                sum[i][j].0 += z.0;
                sum[i][j].1 += z.1;
            }
        }
    }
    // Φ+ is cyclic for I ⊗ M_2, so the target is the identity.
    let target = matrix(&r["povm"]["completeness_target"]);
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((target[i][j].0 - want).abs() < 1e-9);
            assert!((sum[i][j].0 - want).abs() < 1e-9 && sum[i][j].1.abs() < 1e-9);
        }
    }
}

#[test]
fn steer_density_mode_purifies() {
    let (code, r) = run_config("steer", "steer_density.json", &[]);
    assert_eq!(code, 0);
    assert_eq!(r["mode"], "density");
    assert_eq!(r["povm"]["elements"].as_array().unwrap().len(), 4);
    assert!(all_checks_pass(&r));
}

#[test]
fn tightened_tolerance_is_recorded_and_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let base: Value = serde_json::from_str(&fs::read_to_string(config("steer_phi_plus.json")).unwrap()).unwrap();
    let mut cfg = base.clone();
    cfg["tolerances"] = serde_json::json!({"povm.completeness": 0.0});
    let p = write_temp(&dir, "tight.json", &cfg.to_string());
    let out = run(&["steer", "--config", p.to_str().unwrap()]);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["tolerances"]["povm.completeness"], 0.0);
    let c = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "povm.completeness").unwrap();
    let expected = if c["value"].as_f64().unwrap() > 0.0 { 1 } else { 0 };
    assert_eq!(out.status.code(), Some(expected));
}

#[test]
fn bitcommit_honest_same_bit_always_accepted() {
    let (code, r) = run_config("bitcommit", "bitcommit_honest.json", &[]);
    assert_eq!(code, 0);
    assert_eq!(r["acceptance_rate"], 1.0);
    assert_eq!(r["trace_distance_rho0_rho1"], 0.0);
    assert!(r["dense_trace_distance"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn bitcommit_cheat_always_accepted() {
    let (code, r) = run_config("bitcommit", "bitcommit_cheat.json", &[]);
    assert_eq!(code, 0);
    assert_eq!(r["acceptance_rate"], 1.0);
    assert_eq!(r["trace_distance_rho0_rho1"], 0.0);
    assert_eq!(r["cheat_marginal_distance"], 0.0);
    assert_eq!(r["config"]["sites"], 8);
}

#[test]
fn bitcommit_wrong_bit_matches_two_to_minus_n() {
    let (code, r) = run_config("bitcommit", "bitcommit_binding.json", &[]);
    assert_eq!(code, 0);
    let rate = r["acceptance_rate"].as_f64().unwrap();
    let sigma = (0.0625f64 * 0.9375 / 4000.0).sqrt();
    assert!((rate - 0.0625).abs() <= 3.0 * sigma, "rate {rate}");
}

#[test]
fn bitcommit_records_trials_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(
        &dir,
        "rec.json",
        r#"{"sites": 3, "trials": 5, "mode": "cheat", "unveiled_bit": 0, "record_trials": true}"#,
    );
    let out = run(&["bitcommit", "--config", p.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    let trials = r["per_trial"].as_array().unwrap();
    assert_eq!(trials.len(), 5);
    assert_eq!(trials[0]["s_alice"].as_str().unwrap().len(), 3);
    assert_eq!(r["seed"], 9);
    assert_eq!(r["config"]["seed"], 9);
}

#[test]
fn bitcommit_dense_beyond_limit_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(
        &dir,
        "big.json",
        r#"{"sites": 6, "trials": 1, "mode": "honest", "unveiled_bit": 0, "dense": true}"#,
    );
    let out = run(&["bitcommit", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_suites_pass() {
    for (suite, cases) in [("twirl", "100"), ("steering", "100"), ("instrument-locality", "50")] {
        let out = run(&["check", "--suite", suite, "--cases", cases, "--seed", "3"]);
        assert_eq!(out.status.code(), Some(0), "{suite}: {}", String::from_utf8_lossy(&out.stdout));
        let r: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(r["suite"], suite);
        assert_eq!(r["cases"].as_u64().unwrap().to_string(), cases);
        assert!(all_checks_pass(&r));
    }
}

#[test]
fn check_from_config_file() {
    let (code, r) = run_config("check", "check_twirl.json", &[]);
    assert_eq!(code, 0);
    assert_eq!(r["suite"], "twirl");
}

#[test]
fn check_rejects_unknown_suite() {
    let out = run(&["check", "--suite", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn twirl_projects_a_matrix_unit() {
    let (code, r) = run_config("twirl", "twirl_qubit_pair.json", &[]);
    assert_eq!(code, 0);
    // On M_2 ⊗ I_2 the projection onto I ⊗ M_2 is B ↦ ½ I ⊗ Tr_1 B.
    let m = matrix(&r["images"][0]["output"]);
    for (i, row) in m.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            let want = if i == j && i % 2 == 0 { 0.5 } else { 0.0 };
            assert!((z.0 - want).abs() < 1e-12 && z.1.abs() < 1e-12);
        }
    }
    assert_eq!(r["pinching"]["projections"].as_array().unwrap().len(), 2);
}

#[test]
fn unknown_fields_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bitcommit", r#"{"sites": 2, "trials": 1, "mode": "cheat", "unveiled_bit": 0, "bogus": 1}"#),
        ("twirl", r#"{"algebra": {"blocks": [[1, 1]]}, "extra": true}"#),
        ("check", r#"{"suite": "twirl", "cases": 1, "whatever": 0}"#),
        ("steer", r#"{"algebra": {"blocks": [[1, 1]]}, "vector": [[1.0, 0.0]], "ensemble": {"random_split": {"components": 1, "x": 1}}}"#),
    ];
    for (cmd, body) in cases {
        let p = write_temp(&dir, "bad.json", body);
        let out = run(&[cmd, "--config", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unknown_tolerance_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(&dir, "t.json", r#"{"algebra": {"blocks": [[2, 1]]}, "tolerances": {"nope": 1.0}}"#);
    let out = run(&["twirl", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown tolerance"));
}

#[test]
fn missing_config_file_is_config_error() {
    let out = run(&["steer", "--config", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
}

fn strip_timestamp(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes)
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn reports_are_deterministic_apart_from_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, name) in [
        ("steer", "steer_density.json"),
        ("bitcommit", "bitcommit_binding.json"),
        ("twirl", "twirl_qubit_pair.json"),
        ("check", "check_twirl.json"),
    ] {
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        for out in [&a, &b] {
            let st = run(&[cmd, "--config", config(name).to_str().unwrap(), "--out", out.to_str().unwrap()]);
            assert_eq!(st.status.code(), Some(0));
            assert!(st.stdout.is_empty());
        }
        let (ra, rb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert!(String::from_utf8_lossy(&ra).contains("\"timestamp\""));
        assert_eq!(strip_timestamp(&ra), strip_timestamp(&rb), "{cmd}");
    }
}

#[test]
fn seed_flag_changes_random_instances() {
    let (_, a) = run_config("steer", "steer_density.json", &["--seed", "1"]);
    let (_, b) = run_config("steer", "steer_density.json", &["--seed", "2"]);
    assert_eq!(a["seed"], 1);
    assert_ne!(a["ensemble"], b["ensemble"]);
}

#[test]
fn csv_output_has_check_table() {
    let (cfg, dir) = (config("bitcommit_cheat.json"), tempfile::tempdir().unwrap());
    let out = dir.path().join("r.csv");
    let st = run(&["bitcommit", "--config", cfg.to_str().unwrap(), "--format", "csv", "--out", out.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["name", "value", "threshold", "passed"]);
    let names: Vec<String> = rdr.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert!(names.contains(&"concealment".to_string()));
    assert!(names.contains(&"acceptance".to_string()));
}
