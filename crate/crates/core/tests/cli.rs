use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = r#"{
  "domain": {"kind": "disc", "center": [0, 0], "radius": 1},
  "tensor": {"thickness": 0.1, "reference": {"kind": "isotropic", "lambda": 1, "mu": 1},
             "inclusion": {"kind": "scaled", "factor": 2}},
  "inclusion": {"shape": {"kind": "disc", "center": [0, 0], "radius": 0.25}},
  "couple": {"kind": "random_fourier", "support": [0.1, 0.8]},
  "mesh": {"h": 0.15},
  "seed": 3
}"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_platesize"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_tensor_reports_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), BASE, &["check-tensor"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(summary.is_object());
    assert!(dir.path().join("out/check_tensor.json").exists());
    assert!(dir.path().join("out/resolved_config.json").exists());
}

#[test]
fn solve_writes_work_table_and_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), BASE, &["solve", "--quiet"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let out = dir.path().join("out");
    let works = std::fs::read_to_string(out.join("works.csv")).unwrap();
    assert_eq!(works.lines().count(), 2);
    for f in ["mesh_vertices.csv", "mesh_triangles.csv", "solution.vtk"] {
        assert!(out.join("experiment_000").join(f).exists(), "missing {f}");
    }
}

#[test]
fn overrides_reach_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        BASE,
        &["check-tensor", "--quiet", "--seed", "77", "--mesh-h", "0.2"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let resolved: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/resolved_config.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(resolved["seed"], 77);
    assert_eq!(resolved["mesh"]["h"], 0.2);
}

#[test]
fn malformed_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "{\n  \"domain\": ", &["solve"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let o = run(
        dir.path(),
        &BASE.replace("\"seed\": 3", "\"seed\": 3, \"bogus\": 1"),
        &["solve"],
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_platesize"))
        .args(["solve", "--config", "/nonexistent/platesize.json"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn non_elliptic_reference_is_a_hypothesis_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BASE.replace("\"lambda\": 1, \"mu\": 1", "\"lambda\": 1, \"mu\": -0.5");
    let o = run(dir.path(), &cfg, &["check-tensor"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn theorem_form_requires_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BASE.replace("\"seed\": 3", "\"seed\": 3, \"theorem_form\": true");
    let o = run(dir.path(), &cfg, &["bounds"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    let o = run(dir.path(), BASE, &["bounds", "--quiet"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("out/bounds.csv").exists());
}

#[test]
fn unknown_subcommand_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_platesize"))
        .args(["frobnicate", "--config", "x"])
        .output()
        .unwrap();
    assert!(!o.status.success());
}
