use std::path::Path;
use std::process::{Command, Output};

use relusolve::coo::{parse_coo, read_coo};
use relusolve_core::{gen_laplacian, m_cg, rho_alpha, Exponent};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relusolve"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn relusolve")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn build_cg(out: &Path, eps: &str) -> Output {
    run(&[
        "build", "--method", "cg", "--problem", "laplacian1d", "--n", "16", "--eps", eps, "--out",
        out.to_str().unwrap(), "--report", "-",
    ])
}

fn verify_json(network: &Path, samples: &str) -> (i32, Value) {
    let o = run(&["verify", "--network", network.to_str().unwrap(), "--n", "16", "--samples", samples]);
    let v: Value = serde_json::from_slice(&o.stdout).expect("verify prints a json report");
    (code(&o), v)
}

#[test]
fn builds_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let o = run(&[
            "build", "--method", "richardson", "--n", "8", "--eps", "0.3", "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn epsilon_out_of_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = run(&["build", "--method", "richardson", "--eps", "1.5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
}

#[test]
fn unknown_flags_exit_with_two() {
    assert_eq!(code(&run(&["build", "--method", "newton", "--out", "x"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn cg_build_reports_iteration_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cg.json");
    let o = build_cg(&out, "0.5");
    assert_eq!(code(&o), 0);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let spec = gen_laplacian(1, 16).unwrap().spectral;
    let expected = m_cg(0.5, 1.0, rho_alpha(&spec, Exponent::Half)).unwrap();
    assert_eq!(report["params"]["m"].as_u64(), Some(expected as u64));
    let file: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(file["metadata"]["m"].as_u64(), Some(expected as u64));
    assert_eq!(file["metadata"]["method"], "cg");
}

#[test]
fn verify_passes_and_zero_rhs_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cg.json");
    assert_eq!(code(&build_cg(&out, "0.5")), 0);
    let (status, report) = verify_json(&out, "20");
    assert_eq!(status, 0);
    assert_eq!(report["passed"], true);
    assert_eq!(report["samples"].as_array().unwrap().len(), 20);
    assert!(report["max_error"].as_f64().unwrap() <= 0.5);
    assert_eq!(report["zero_rhs_error"].as_f64(), Some(0.0));
}

#[test]
fn corrupted_network_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cg.json");
    assert_eq!(code(&build_cg(&out, "0.5")), 0);
    let mut doc: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    // Zero a single first-layer weight reading the matrix value A_11. Zeroing
    // an r_0 weight instead stays within eps=0.5 since that input is small.
    let triplets = doc["layers"][0]["triplets"].as_array_mut().unwrap();
    let hit = triplets.iter_mut().find(|t| t[1].as_u64() == Some(0)).unwrap();
    hit[2] = Value::from(0.0);
    std::fs::write(&out, serde_json::to_vec(&doc).unwrap()).unwrap();
    let (status, report) = verify_json(&out, "5");
    assert_eq!(status, 1);
    assert_eq!(report["passed"], false);
}

#[test]
fn missing_metadata_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cg.json");
    assert_eq!(code(&build_cg(&out, "0.5")), 0);
    let mut doc: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    doc.as_object_mut().unwrap().remove("metadata");
    std::fs::write(&out, serde_json::to_vec(&doc).unwrap()).unwrap();
    let o = run(&["verify", "--network", out.to_str().unwrap(), "--n", "16"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("metadata"));
}

#[test]
fn missing_network_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--network", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn coo_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.coo");
    let o = run(&["gen", "--problem", "laplacian2d", "--n", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let a = read_coo(&out).unwrap();
    assert_eq!(a, gen_laplacian(2, 4).unwrap().matrix);

    let stdout = run(&["gen", "--problem", "laplacian2d", "--n", "4"]).stdout;
    assert_eq!(parse_coo(std::str::from_utf8(&stdout).unwrap()).unwrap(), a);

    let net = dir.path().join("f.json");
    let problem = format!("file:{}", out.display());
    let o = run(&[
        "build", "--method", "cg", "--problem", &problem, "--eps", "0.5", "--out", net.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["verify", "--network", net.to_str().unwrap(), "--problem", &problem, "--samples", "5"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn audit_table_has_one_row_per_case() {
    let o = run(&["audit", "--method", "cg", "--n", "6,8", "--eps", "0.2,0.1", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("method,n,eta,kappa,eps,m,L,M,ratio_L,ratio_M,flag_L,flag_M")
    );
    assert_eq!(lines.count(), 4);
}
