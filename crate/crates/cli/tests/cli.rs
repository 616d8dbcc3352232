use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qemcheck_core::identities::{catalog, CheckKind};
use serde_json::Value;
use tempfile::TempDir;

fn qemcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qemcheck"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_full_suite_on_the_three_sphere() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "s3.cfg", "family = sphere\nn = 3\ntau = 1\nm = 2\nsuite = all\npoints = 40\n");
    let json = dir.path().join("report.json");
    let out = qemcheck(&["verify", "--config", cfg.to_str().unwrap(), "--json", json.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&json);
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["seed"], 3);
    assert_eq!(report["pass"], true);
    let run = &report["runs"][0];
    let checks = run["checks"].as_array().unwrap();
    let expected = catalog().iter().filter(|e| e.kind != CheckKind::Integral).count();
    assert_eq!(checks.len(), expected);
    for c in checks {
        assert_eq!(c["n_points"], 40);
        assert!(!c["anchor"].as_str().unwrap().is_empty());
        for key in ["id", "max_residual", "mean_residual", "pass"] {
            assert!(c.get(key).is_some(), "{key} missing in {c}");
        }
    }
    assert!(run["skipped"].as_array().unwrap().is_empty());
}

#[test]
fn constraint_violation_exits_two_without_a_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.cfg", "family = sphere\nn = 2\ntau = 0.4\nm = 2\n");
    let json = dir.path().join("report.json");
    let out = qemcheck(&["verify", "--config", cfg.to_str().unwrap(), "--json", json.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("tau > r/n"), "{}", stderr(&out));
    assert!(!json.exists());
    assert!(out.stdout.is_empty());
}

#[test]
fn integral_suite_on_a_noncompact_model_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "e.cfg", "family = euclidean\nn = 2\ntau = 1\nm = 2\nsuite = integral\n");
    let json = dir.path().join("report.json");
    for command in ["verify", "integrate"] {
        let out = qemcheck(&[command, "--config", cfg.to_str().unwrap(), "--json", json.to_str().unwrap()]);
        assert_eq!(code(&out), 2, "{command}");
        assert!(stderr(&out).contains("compact"), "{}", stderr(&out));
        assert!(!json.exists());
    }
}

#[test]
fn unknown_key_is_named() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "u.cfg", "family = sphere\nn = 2\ntau = 1\nm = 2\ntol.order5 = 1e-3\n");
    let out = qemcheck(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("tol.order5"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&qemcheck(&["verify"])), 2);
    assert_eq!(code(&qemcheck(&["verify", "--config", "/nonexistent/path.cfg"])), 2);
    assert_eq!(code(&qemcheck(&["frobnicate"])), 2);
    assert_eq!(code(&qemcheck(&["verify", "--config", "x", "--seed", "minus"])), 2);
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "list.cfg", "family = sphere\nn = 2, 3\ntau = 1\nm = 2\n");
    let out = qemcheck(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("only accepted by scan"));
    let cfg = write_config(&dir, "scale.cfg", "family = sphere\nn = 2\ntau = 1\nm = 2\n");
    let out = qemcheck(&["verify", "--config", cfg.to_str().unwrap(), "--tol-scale", "-1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missed_tolerance_exits_one_with_a_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "s2.cfg", "family = sphere\nn = 2\ntau = 1\nm = 2\nsuite = pointwise\npoints = 10\n");
    let json = dir.path().join("report.json");
    let out = qemcheck(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
        "--tol-scale",
        "1e-12",
    ]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let report = read_json(&json);
    assert_eq!(report["pass"], false);
    assert_eq!(report["config"]["tol_scale"], 1e-12);
}

#[test]
fn integrate_on_the_two_sphere() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "s2.cfg", "family = sphere\nn = 2\ntau = 0.8\nm = 5\ngrid = 32x64\n");
    let out = qemcheck(&["integrate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let integrals = report["runs"][0]["integrals"].as_array().unwrap();
    let expected = catalog().iter().filter(|e| e.kind == CheckKind::Integral).count();
    assert_eq!(integrals.len(), expected);
    for i in integrals {
        assert_eq!(i["resolution"], serde_json::json!([32, 64]));
        assert_eq!(i["pass"], true, "{i}");
        for key in ["lhs", "rhs", "relative_gap"] {
            assert!(i[key].is_number());
        }
    }
}

#[test]
fn scan_writes_one_row_per_combination_and_identity() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "scan.cfg",
        "family = sphere\nn = 2, 3, 4\nm = 1, 2, 5\nsuite = pointwise\npoints = 5\n",
    );
    let csv_path = dir.path().join("scan.csv");
    let out = qemcheck(&["scan", "--config", cfg.to_str().unwrap(), "--csv", csv_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["n", "m", "tau", "identity", "max_residual", "pass"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let identities = catalog().iter().filter(|e| e.kind == CheckKind::Pointwise).count();
    assert_eq!(rows.len(), 27 * identities);
    let combos: std::collections::BTreeSet<(String, String, String)> =
        rows.iter().map(|r| (r[0].to_string(), r[1].to_string(), r[2].to_string())).collect();
    assert_eq!(combos.len(), 27);
    assert!(rows.iter().all(|r| &r[5] == "true"));
}

#[test]
fn scan_rejects_empty_lists_and_invalid_combinations() {
    let dir = TempDir::new().unwrap();
    let empty = write_config(&dir, "empty.cfg", "family = sphere\nn = 2, 3\nm = \n");
    let csv_path = dir.path().join("scan.csv");
    let out = qemcheck(&["scan", "--config", empty.to_str().unwrap(), "--csv", csv_path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    // τ = 0.4 is valid for n = 3 but not for n = 2; nothing may be written.
    let mixed = write_config(&dir, "mixed.cfg", "family = sphere\nn = 3, 2\nm = 1\ntau = 0.4\n");
    let out = qemcheck(&["scan", "--config", mixed.to_str().unwrap(), "--csv", csv_path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(!csv_path.exists());
}

#[test]
fn hyperbolic_reports_note_the_lambda_sign() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "h.cfg", "family = hyperbolic\nn = 3\ntau = 0.5\nm = 2\npoints = 10\n");
    let out = qemcheck(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let notes = report["runs"][0]["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().contains("sign")));
}

#[test]
fn catalog_listing() {
    let out = qemcheck(&["catalog"]);
    assert_eq!(code(&out), 0);
    let listing: Value = serde_json::from_slice(&out.stdout).unwrap();
    let entries = listing["entries"].as_array().unwrap();
    assert_eq!(entries.len(), catalog().len());
    assert!(entries.iter().all(|e| !e["anchor"].as_str().unwrap().is_empty()));
    let laplacian = entries.iter().find(|e| e["id"] == "scalar_curvature_laplacian").unwrap();
    assert_eq!(laplacian["order"], serde_json::json!({"g": 4, "f": 3, "λ": 2}));
}
