use std::path::Path;
use std::process::{Command, Output};

fn udn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_udn"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

/// Header and rows of a CSV document, skipping `#` comments.
fn table(doc: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = doc.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn limit_prints_the_coverage_limit() {
    let dir = tempfile::tempdir().unwrap();
    let out = udn(dir.path(), &["limit"]);
    assert!(out.status.success());
    let doc = String::from_utf8(out.stdout).unwrap();
    assert!(doc.starts_with("# udn "));
    let (h, rows) = table(&doc);
    let p: f64 = rows[0][column(&h, "pcov_limit")].parse().unwrap();
    assert!((p - 0.806).abs() < 0.01);
    let c: f64 = rows[0][column(&h, "c")].parse().unwrap();
    assert!(c < 1.0 && c > 1.0 - 1e-5);
}

#[test]
fn malformed_config_fails_on_one_line_without_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[scenario]\nrho_per_km2 = 300.0\nlamda = 4.0\n")
        .unwrap();
    let out = udn(dir.path(), &["--config", "bad.toml", "--output", "out.csv", "limit"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error kind=config line=3 "), "{err}");
    assert!(!dir.path().join("out.csv").exists());
}

#[test]
fn numerical_failures_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = udn(dir.path(), &["--output", "out.csv", "limit", "--rho", "-3"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error kind=domain "), "{err}");
    assert!(!dir.path().join("out.csv").exists());

    let out = udn(dir.path(), &["limit", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error kind=usage "));
}

#[test]
fn rerun_reproduces_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let first = udn(
        dir.path(),
        &["--output", "a.csv", "simulate", "--lambda", "1e4", "--trials", "300", "--seed", "9", "--gamma-db", "-3"],
    );
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let again = udn(dir.path(), &["--workers", "2", "--output", "b.csv", "rerun", "a.csv"]);
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);

    let doc = String::from_utf8(a).unwrap();
    let (h, rows) = table(&doc);
    assert_eq!(
        h,
        ["lambda", "rho", "height_m", "gamma_db", "pcov_mc", "pcov_stderr", "active_density_mc", "trials", "seed"]
    );
    assert_eq!(rows[0][column(&h, "trials")], "300");
    assert_eq!(rows[0][column(&h, "gamma_db")], "-3");
}

#[test]
fn run_uses_the_configured_command() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
command = "coverage-sweep"
output = "sweep.csv"

[sweep]
lambda_from = 100.0
lambda_to = 1e6
points_per_decade = 1
rho = [300.0, 600.0]
"#;
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    let out = udn(dir.path(), &["--config", "run.toml", "run"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let (h, rows) = table(&doc);
    assert_eq!(rows.len(), 10);
    let (dense, limit) = (column(&h, "pcov_dense_approx"), column(&h, "pcov_limit"));
    for r in rows.iter().filter(|r| r[0] == "1000000") {
        let d: f64 = r[dense].parse().unwrap();
        let l: f64 = r[limit].parse().unwrap();
        assert!((d - l).abs() / l < 5e-3);
    }
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[scenario]\nrho_per_km2 = 600.0\n").unwrap();
    let out = udn(dir.path(), &["--config", "c.toml", "limit"]);
    let (h, rows) = table(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0][column(&h, "rho")], "600");
    let out = udn(dir.path(), &["--config", "c.toml", "limit", "--rho", "150"]);
    let (h, rows) = table(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0][column(&h, "rho")], "150");
}

#[test]
fn inline_model_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
[model]
name = "single-slope"
[[model.segments]]
a_los = 4.168693834703354e-11
a_nlos = 2.884031503126606e-15
alpha_los = 2.09
alpha_nlos = 3.75
los_prob = { kind = "constant", value = 0.0 }
"#;
    std::fs::write(dir.path().join("m.toml"), config).unwrap();
    let out = udn(dir.path(), &["--config", "m.toml", "limit"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = String::from_utf8(out.stdout).unwrap();
    assert!(doc.contains("# name = \"single-slope\""));
}

#[test]
fn figure_recipes_have_their_columns() {
    let dir = tempfile::tempdir().unwrap();
    let small = [
        "--trials", "40", "--lambda-from", "1e3", "--lambda-to", "1e5", "--points-per-decade", "1",
    ];
    let mut args = vec!["--output", "fig1.csv", "reproduce", "fig1"];
    args.extend(small);
    let out = udn(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = table(&std::fs::read_to_string(dir.path().join("fig1.csv")).unwrap());
    assert_eq!(
        h,
        ["lambda", "rho", "height_m", "gamma_db", "pcov_mc", "pcov_stderr", "pcov_dense_approx", "pcov_limit"]
    );
    // ρ ∈ {300, 600} × L ∈ {3.5, 8.5} × three densities
    assert_eq!(rows.len(), 12);

    let mut args = vec!["--output", "fig2.csv", "reproduce", "fig2"];
    args.extend(small);
    let out = udn(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = table(&std::fs::read_to_string(dir.path().join("fig2.csv")).unwrap());
    assert_eq!(
        h,
        ["lambda", "rho", "height_m", "gamma0_db", "ase_mc", "ase_mc_stderr", "ase_dense_approx", "ase_limit"]
    );
    assert_eq!(rows.len(), 12);
}

#[test]
fn design_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = udn(dir.path(), &["deploy"]);
    assert!(out.status.success());
    let (h, rows) = table(&String::from_utf8(out.stdout).unwrap());
    let target: f64 = rows[0][column(&h, "target")].parse().unwrap();
    let limit: f64 = rows[0][column(&h, "ase_limit")].parse().unwrap();
    assert!((target - 0.95 * limit).abs() < 1e-9 * limit);
    // the dense λ* does not survive simulation
    assert_eq!(rows[0][column(&h, "verification_passed")], "false");

    let out = udn(dir.path(), &["schedule"]);
    assert!(out.status.success());
    let (h, rows) = table(&String::from_utf8(out.stdout).unwrap());
    let rho: f64 = rows[0][column(&h, "rho_star")].parse().unwrap();
    assert!(rho > 300.0 && rho < 2000.0);
    assert_eq!(rows[0][column(&h, "unimodal")], "true");
}

#[test]
fn ase_sweep_with_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let out = udn(
        dir.path(),
        &["ase-sweep", "--engine", "monte-carlo", "--trials", "100", "--lambda-from", "1e4", "--lambda-to", "1e4"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = table(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][column(&h, "engine")], "monte-carlo");
    let u: f64 = rows[0][column(&h, "uncertainty")].parse().unwrap();
    assert!(u > 0.0);
}
