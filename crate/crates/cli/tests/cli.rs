use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn okounkov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_okounkov"))
        .args(args)
        .env("OKOUNKOV_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = r#"{
  "series": {"projective": 1},
  "max_level": 60,
  "weights": [{"prime": 2, "pieces": [{"slope": [1], "offset": 0}, {"slope": [-1], "offset": 1}]}],
  "gromov": {"max_level": 6, "samples": 50},
  "nonarch": {"max_level": 20, "cases": 10}
}"#;

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", SMALL);
    let out = okounkov(&["validate", &good]);
    assert!(out.status.success());

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"series": {"projective": 1}, "max_level": 0, "checks": ["nope"], "colour": 1}"#,
    );
    let out = okounkov(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    for needle in ["max_level", "checks[0]", "colour"] {
        assert!(err.contains(needle), "missing {needle} in {err}");
    }
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = okounkov(&["run", &cfg, "--out", a.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = okounkov(&["run", &cfg, "--out", b.to_str().unwrap()]);
    assert!(out.status.success());

    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() > 13);
    for n in &names {
        assert_eq!(
            fs::read(a.join(n)).unwrap(),
            fs::read(b.join(n)).unwrap(),
            "{n:?} differs"
        );
    }

    let summary = json(&a.join("summary.json"));
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["checks"].as_array().unwrap().len(), 13);
    let report = json(&a.join("riemann_roch.json"));
    for key in [
        "check",
        "inputs",
        "per_level",
        "fitted",
        "verdict",
        "config_hash",
        "tolerances",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["config_hash"], summary["config_hash"]);
}

#[test]
fn csv_tables_have_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let o = dir.path().join("o");
    let out = okounkov(&[
        "run",
        &cfg,
        "--checks",
        "summation_theorem,volume_identity",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text =
        fs::read_to_string(o.join("summation_theorem__summation_scaled_remainder.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,value,model_fit,residual"));
    for l in lines {
        let cells: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 4);
        assert!((cells[1] - cells[2] - cells[3]).abs() < 1e-9 * cells[1].abs().max(1.0));
    }
    assert!(!o.join("main_theorem.json").exists());
}

#[test]
fn tight_tolerance_fails_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL.replacen(
        "\"max_level\": 60,",
        "\"max_level\": 60, \"tolerances\": {\"main_theorem\": 1e-12},",
        1,
    );
    let cfg = write(dir.path(), "c.json", &cfg);
    let o = dir.path().join("o");
    let out = okounkov(&[
        "run",
        &cfg,
        "--checks",
        "main_theorem",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&o.join("main_theorem.json"))["verdict"], "FAIL");
}

#[test]
fn khovanskii_bound_is_inconclusive_not_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "k.json",
        r#"{"series": {"projective": 1}, "max_level": 20, "checks": ["khovanskii"],
            "khovanskii": {"generators": [{"exponent": [0], "level": 1}, {"exponent": [5], "level": 1},
                                          {"exponent": [7], "level": 2}],
                           "body": [["1"], ["4"]], "bound": 3}}"#,
    );
    let o = dir.path().join("o");
    let out = okounkov(&["run", &cfg, "--out", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&o.join("khovanskii.json"));
    assert_eq!(r["verdict"], "INCONCLUSIVE");
    assert!(!r["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn okounkov_subcommand_reports_body_and_volume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.json",
        r#"{"series": {"vertices": [[0, 0], [2, 0], [0, 1]]}, "max_level": 12}"#,
    );
    let o = dir.path().join("o");
    let out = okounkov(&["okounkov", &cfg, "--out", o.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(&o.join("okounkov_body.json"));
    assert_eq!(r["fitted"]["volume"], "1");
    assert!(o.join("volume_identity.json").exists());
}
