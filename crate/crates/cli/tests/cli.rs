use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kink")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn solve_default_grid_writes_profile_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phi.csv");
    let o = kink(&["solve", "--q", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,phi"));
    assert_eq!(lines.count(), 801);
    assert!(!csv.contains('\r'));
    let report = read_json(&dir.path().join("phi.csv.report.json"));
    assert_eq!(report["converged"], true);
    assert_eq!(report["is_kink"], true);
    let manifest = read_json(&dir.path().join("phi.csv.manifest.json"));
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["parameters"]["L"], 20.0);
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn solve_restart_from_file_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("phi.json");
    let o = kink(&["solve", "--q", "0.1", "--format", "json", "--out", first.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let profile = read_json(&first);
    assert_eq!(profile["values"].as_array().unwrap().len(), 801);
    let second = dir.path().join("again.csv");
    let init = format!("file:{}", first.display());
    let o = kink(&["solve", "--q", "0.1", "--init", &init, "--out", second.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let report = read_json(&dir.path().join("again.csv.report.json"));
    assert!(report["iterations"].as_u64().unwrap() <= 2);
}

#[test]
fn solve_reproduces_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        assert_eq!(code(&kink(&["solve", "--q", "0.2", "--init", "sign", "--out", p.to_str().unwrap()])), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn solve_exit_codes() {
    assert_eq!(code(&kink(&["solve", "--q", "0", "--h", "0.03"])), 1);
    assert_eq!(code(&kink(&["solve", "--q", "-1"])), 1);
    assert_eq!(code(&kink(&["solve", "--q", "0", "--omega", "1.5"])), 1);
    assert_eq!(code(&kink(&["solve", "--q", "0", "--init", "banana"])), 1);
    assert_eq!(code(&kink(&["solve", "--q", "0", "--init", "file:/nonexistent/phi.csv"])), 1);
    assert_eq!(code(&kink(&["solve", "--q", "0", "--bogus"])), 1);
    assert_eq!(code(&kink(&["solve"])), 1);
    assert_eq!(code(&kink(&["--help"])), 0);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("far.csv");
    let o = kink(&["solve", "--q", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let report = read_json(&dir.path().join("far.csv.report.json"));
    assert_eq!(report["is_kink"], false);
    assert_eq!(read_json(&dir.path().join("far.csv.manifest.json"))["exit_code"], 2);

    let o = kink(&["solve", "--q", "0", "--max-iter", "3"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn constants_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ledger.json");
    assert_eq!(code(&kink(&["constants", "--out", out.to_str().unwrap()])), 0);
    let l = read_json(&out);
    let (b, c0) = (l["b"].as_f64().unwrap(), l["c0"].as_f64().unwrap());
    assert_eq!(c0, b.sqrt());
    let (c4, q0) = (l["c4"].as_f64().unwrap(), l["q0"].as_f64().unwrap());
    assert!(c4 * q0 * q0 < l["c3"].as_f64().unwrap() * l["c2"].as_f64().unwrap());
    assert!(dir.path().join("ledger.json.manifest.json").exists());

    assert_eq!(code(&kink(&["constants", "--q-max", "-1"])), 1);
    // kernel norms over q <= 0.1 cannot support q0 ≈ 0.28
    assert_eq!(code(&kink(&["constants", "--q-max", "0.1"])), 3);
}

#[test]
fn verify_passes_across_the_proof_range() {
    for q in ["0", "q0/2", "q0"] {
        let o = kink(&["verify", "--q", q, "--seed", "42", "--trials", "100"]);
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert_eq!(code(&o), 0, "q = {q}: {stdout}");
        assert_eq!(stdout.matches("PASS").count(), 3, "{stdout}");
        // manifest goes to stderr without --out
        assert!(String::from_utf8_lossy(&o.stderr).contains("\"command\": \"verify\""));
    }
    assert_eq!(code(&kink(&["verify", "--q", "1"])), 1);
    assert_eq!(code(&kink(&["verify", "--q", "q0/0"])), 1);
    assert_eq!(code(&kink(&["verify", "--q", "abc"])), 1);
}

#[test]
fn scan_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.json");
    let o = kink(&[
        "scan", "--q-min", "2", "--q-max", "2.5", "--steps", "2", "--bisect-tol", "0.01", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    let bracket = r["q_star_bracket"].as_array().unwrap();
    let (lo, hi) = (bracket[0].as_f64().unwrap(), bracket[1].as_f64().unwrap());
    assert!(hi - lo <= 0.01 && lo >= r["q0"].as_f64().unwrap());
    assert!(r["cold_disagreements"].as_array().unwrap().is_empty());
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert!(csv.starts_with("q,converged,residual,amplitude\n"));
    assert!(dir.path().join("scan.json.manifest.json").exists());
    assert_eq!(code(&kink(&["scan", "--q-min", "1", "--q-max", "0.5"])), 1);
}

#[test]
fn kernel_inspection() {
    let o = kink(&["kernel", "--q", "1", "--x", "0,2"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["sign_change"].as_f64().unwrap() - 6f64.sqrt()).abs() < 1e-14);
    assert!((v["derivative_sign_change"].as_f64().unwrap() - 10f64.sqrt()).abs() < 1e-14);
    assert_eq!(v["fourier_symbol_at_zero"], 1.0);
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
    assert_eq!(code(&kink(&["kernel", "--q", "-0.5"])), 1);
}
