//! End-to-end runs of the `ffsheets` binary.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(command: &str, config: &Path, out: &Path) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_ffsheets"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--jobs")
        .arg("2")
        .output()
        .unwrap();
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

/// Copy of a shipped config with `edit` applied.
fn edited(name: &str, dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(configs().join(name)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join(format!("edited_{name}"));
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    path
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn smatrix_anchor_row_and_run_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited("reference.json", dir.path(), |v| {
        v["smatrix"]["energies"] = serde_json::json!({"start": -0.9, "stop": 0.9, "count": 51});
    });
    let (code, stdout, _) = run("smatrix", &cfg, dir.path());
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["command"], "smatrix");
    assert_eq!(report["config_digest"].as_str().unwrap().len(), 64);
    assert!(report["diagnostics"]["max_unitarity_residual"].as_f64().unwrap() <= 1e-8);
    let (header, rows) = csv(&dir.path().join("smatrix.csv"));
    assert_eq!(rows.len(), 51);
    let row = &rows[25];
    assert_eq!(row[0].parse::<f64>().unwrap(), 0.0);
    let re: f64 = row[column(&header, "re_s_1_1")].parse().unwrap();
    let im: f64 = row[column(&header, "im_s_1_1")].parse().unwrap();
    let d = 1.0 + PI * PI;
    assert!((re - (1.0 - PI * PI) / d).abs() <= 1e-10 && (im + 2.0 * PI / d).abs() <= 1e-10);
}

#[test]
fn zero_kernel_outputs_are_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("zero.json");
    for cmd in ["smatrix", "resonances", "sheetmap", "deform"] {
        assert_eq!(run(cmd, &cfg, dir.path()).0, 0, "{cmd}");
    }
    let (h, rows) = csv(&dir.path().join("smatrix.csv"));
    for r in &rows {
        assert_eq!(r[column(&h, "re_s_1_1")].parse::<f64>().unwrap(), 1.0);
        assert_eq!(r[column(&h, "im_s_1_1")].parse::<f64>().unwrap(), 0.0);
    }
    let (h, rows) = csv(&dir.path().join("sheetmap.csv"));
    for r in &rows {
        assert_eq!(r[column(&h, "abs_det_s")].parse::<f64>().unwrap(), 1.0);
    }
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("resonances.json")).unwrap()).unwrap();
    for d in report["detectors"].as_array().unwrap() {
        assert!(d["resonances"].as_array().unwrap().is_empty());
    }
    let (h, rows) = csv(&dir.path().join("spectrum_shallow.csv"));
    assert_eq!(rows.len(), 96);
    assert!(rows.iter().all(|r| r[column(&h, "class")] == "near_contour"));
}

#[test]
fn malformed_region_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited("reference.json", dir.path(), |v| {
        v["resonances"]["region"]["im_min"] = 0.1.into();
        v["resonances"]["region"]["im_max"] = 0.3.into();
    });
    let (code, _, stderr) = run("resonances", &cfg, dir.path());
    assert_eq!(code, 2);
    assert!(stderr.contains("resonances.region.im_max"), "{stderr}");
}

#[test]
fn schema_violation_cites_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited("reference.json", dir.path(), |v| {
        v["contours"]["deep"]["depth"] = "deep".into();
    });
    let (code, _, stderr) = run("validate", &cfg, dir.path());
    assert_eq!(code, 2);
    assert!(stderr.contains("contours.deep"), "{stderr}");
}

#[test]
fn validate_reports_the_kernel_checks() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run("validate", &configs().join("coupled_channels.json"), dir.path());
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("validation.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn detectors_agree_on_the_weak_coupling_kernel() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("resonances", &configs().join("weak_coupling.json"), dir.path()).0, 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("resonances.json")).unwrap()).unwrap();
    let matches = v["matches"].as_array().unwrap();
    assert_eq!(matches.len(), 3);
    for m in matches {
        assert_eq!(m["pairs"].as_array().unwrap().len(), 1);
        let limit = if m["right"] == "deformation" { 1e-5 } else { 1e-8 };
        assert!(m["max_distance"].as_f64().unwrap() <= limit, "{m}");
    }
    let first = &v["detectors"][0]["resonances"][0];
    assert_eq!(first["sheet"], "pi-1");
    assert_eq!(first["residue_rank"], 1);
}

#[test]
fn bound_state_row_in_the_deformed_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("deform", &configs().join("bound_state.json"), dir.path()).0, 0);
    let (h, rows) = csv(&dir.path().join("spectrum_deep.csv"));
    let real: Vec<f64> = rows
        .iter()
        .filter(|r| r[column(&h, "class")] == "isolated_real")
        .map(|r| r[column(&h, "re")].parse().unwrap())
        .collect();
    assert_eq!(real.len(), 1);
    assert!((real[0] + 1.207_408_857_542_286_5).abs() <= 1e-7);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("deform_report.json")).unwrap()).unwrap();
    assert!(report["independence"][0]["max_distance"].as_f64().unwrap() <= 1e-5);
}
