use std::path::Path;
use std::process::{Command, Output};

fn sff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, extra: &[&str], scenario: &str) -> Output {
    let mut args = vec!["--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["run", scenario]);
    sff(&args)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn summary(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap())
        .unwrap()
}

#[test]
fn list_shows_bundled_scenarios() {
    let out = sff(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 10, "{text}");
    assert!(text.contains("clifford_ii_minimal") && text.contains("catenary_ode"));

    let out = sff(&["list", "--json"]);
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let n = rows.as_array().unwrap().len();
    assert!(n >= 10);

    let empty = tempfile::tempdir().unwrap();
    let out = sff(&["list", "--json", "--dir", empty.path().to_str().unwrap()]);
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), n);
}

#[test]
fn custom_directory_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/scenarios/catenary_ode.json"
    ))
    .unwrap()
    .replace("\"catenary_ode\"", "\"my_catenary\"");
    write(dir.path(), "mine.json", &text);
    write(dir.path(), "broken.json", "{");
    let out = sff(&["list", "--dir", dir.path().to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("my_catenary"));
}

#[test]
fn clifford_torus_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &[], "clifford_ii_minimal");
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary(dir.path(), "clifford_ii_minimal");
    assert_eq!(s["passed"], true);
    assert!(s["checks"][0]["value"].as_f64().unwrap() < 1e-6);
}

#[test]
fn catenary_residuals_are_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &[], "crates/../scenarios/does-not-exist.json");
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(
        dir.path(),
        &[],
        concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/catenary_ode.json"),
    );
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path(), "catenary_ode");
    assert!(s["checks"][0]["value"].as_f64().unwrap() < 1e-12);
    let table =
        std::fs::read_to_string(dir.path().join("catenary_ode.check0.ode_residual.csv")).unwrap();
    assert!(table.starts_with("s,kappa,h_ii,ode_residual,serret_t,serret_u\n"));
    assert_eq!(table.lines().count(), 66);
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "{ not json",
        r#"{"schema": 2, "name": "x", "subject": {"kind": "curve_ode", "ambient": "planar"}, "checks": [{"check": "integrate", "k0": 1, "k1": 0, "s_max": 1, "reference": "constant", "tolerance": 1}]}"#,
        r#"{"schema": 1, "name": "x", "bogus": 1, "subject": {"kind": "curve_ode", "ambient": "planar"}, "checks": []}"#,
        r#"{"schema": 1, "name": "x", "subject": {"kind": "curve_ode", "ambient": "planar"}, "checks": [{"check": "integrate", "k0": 1, "k1": 0, "s_max": 1, "reference": "constant", "tolerance": -1}]}"#,
        r#"{"schema": 1, "name": "x", "subject": {"kind": "curve_ode", "ambient": "planar"}, "checks": [{"check": "max_abs_h_ii", "tolerance": 1}]}"#,
        r#"{"schema": 1, "name": "x", "subject": {"kind": "sphere_study", "center": [0, 0, 0]}, "checks": [{"check": "flatness", "expect_flat": true, "tolerance": 1}]}"#,
    ];
    for (i, c) in cases.iter().enumerate() {
        let p = write(dir.path(), &format!("bad{i}.json"), c);
        let out = run_in(dir.path(), &[], &p);
        assert_eq!(
            out.status.code(),
            Some(2),
            "case {i}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = run_in(dir.path(), &["--tolerance-scale", "0"], "catenary_ode");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["--tolerance-scale", "1e-30"],
        "latitude_ii_minimal",
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("latitude_ii_minimal check"), "{err}");
    let s = summary(dir.path(), "latitude_ii_minimal");
    assert_eq!(s["passed"], false);
    assert!((s["tolerance_scale"].as_f64().unwrap() / 1e-30 - 1.0).abs() < 1e-12);
}

#[test]
fn numerical_errors_exit_3_unless_expected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &[], "singular_plane_expected");
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/scenarios/singular_plane_expected.json"
    ))
    .unwrap()
    .replace(
        r#""expect_error": "SingularShapeOperator""#,
        r#""tolerance": 1e-6"#,
    );
    let p = write(dir.path(), "plane.json", &text);
    let out = run_in(dir.path(), &[], &p);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("SingularShapeOperator"));
    let s = summary(dir.path(), "singular_plane_expected");
    assert_eq!(s["checks"][0]["status"], "error");
}

#[test]
fn output_is_deterministic_and_atomic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        assert_eq!(
            run_in(d, &["--seed", "5"], "series_recombination")
                .status
                .code(),
            Some(0)
        );
        assert_eq!(run_in(d, &[], "catenary_ode").status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6, "{names:?}");
    for n in &names {
        let x = std::fs::read(a.path().join(n)).unwrap();
        let y = std::fs::read(b.path().join(n)).unwrap();
        assert_eq!(x, y, "{n:?} differs");
    }
    assert_eq!(summary(a.path(), "series_recombination")["seed"], 5);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &[], "series_recombination");
    assert_eq!(summary(dir.path(), "series_recombination")["seed"], 7);
    run_in(dir.path(), &["--seed", "11"], "series_recombination");
    assert_eq!(summary(dir.path(), "series_recombination")["seed"], 11);
}

#[test]
fn bundled_scenarios_parse() {
    for (name, text) in sff_cli::BUNDLED {
        let s = sff_cli::scenario::Scenario::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(&s.name, name);
        assert!(!s.description.is_empty());
    }
}
