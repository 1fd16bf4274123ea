use std::fs;
use std::path::{Path, PathBuf};

use dislox::io::{export::parse_field_csv, run_command};
use tempfile::TempDir;

const FORWARD: &str = r#"
mode = "forward"

[mesh]
generator = "unit_square_fault"
n = 16

[material.1]
lambda = 1.5
mu = 1.0

[material.2]
lambda = 1.5
mu = 1.0

[slip]
bump = { center = [0.5, 0.5], halfwidth = 0.25, amplitude = 0.01, direction = [1.0, 0.0] }
"#;

const MMS: &str = r#"
mode = "mms"

[mesh]
generator = "unit_square_fault"
n = 16

[slip]
manufactured = "smooth_jump"
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> i32 {
    run_command(std::iter::once("dislox").chain(args.iter().copied()))
}

#[test]
fn forward_writes_fields_and_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "ok.toml", FORWARD);
    assert_eq!(run(&["forward", cfg.to_str().unwrap(), "--method", "split"]), 0);
    let out = dir.path().join("out");
    for f in ["displacement.csv", "displacement.vtk", "transmission.csv", "manifest.toml"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("config_sha256") && manifest.contains("method = \"split\""));
    let rows = parse_field_csv(&fs::read_to_string(out.join("displacement.csv")).unwrap()).unwrap();
    assert!(rows.iter().any(|(_, _, u)| u[0] != 0.0));
}

#[test]
fn missing_and_invalid_configs_exit_with_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&["forward", dir.path().join("missing.toml").to_str().unwrap()]), 1);
    let typo = FORWARD.to_string() + "\n[solver]\ncg_toll = 1e-10\n";
    let cfg = write(dir.path(), "typo.toml", &typo);
    assert_eq!(run(&["forward", cfg.to_str().unwrap()]), 1);
    let cfg = write(dir.path(), "ok.toml", FORWARD);
    assert_eq!(run(&["mms", cfg.to_str().unwrap()]), 1);
    assert_eq!(run(&["forward", cfg.to_str().unwrap(), "--method", "fem"]), 1);
    assert_eq!(run(&["frobnicate"]), 1);
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn mms_table_has_one_row_per_level() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "mms.toml", MMS);
    assert_eq!(run(&["mms", cfg.to_str().unwrap(), "--levels", "3"]), 0);
    let table = fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 4);
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| *h == "order_l2_split").unwrap();
    assert_eq!(lines[1].split(',').nth(col), Some(""));
    for l in &lines[2..] {
        let order: f64 = l.split(',').nth(col).unwrap().parse().unwrap();
        assert!(order > 1.5);
    }
}

#[test]
fn vtk_export_shows_duplicated_nodes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "ok.toml", FORWARD);
    assert_eq!(run(&["export", cfg.to_str().unwrap(), "--format", "vtk"]), 0);
    let vtk = fs::read_to_string(dir.path().join("out/displacement.vtk")).unwrap();
    let points: usize = vtk.lines().find_map(|l| l.strip_prefix("POINTS ")).unwrap().split(' ').next().unwrap().parse().unwrap();
    // 17×17 grid nodes plus the 7 interior nodes of the 8-facet fault.
    assert_eq!(points, 17 * 17 + 7);
    assert!(!dir.path().join("out/displacement.csv").exists());
}

#[test]
fn check_passes_on_a_valid_scenario() {
    let dir = TempDir::new().unwrap();
    let text = FORWARD.replace("mode = \"forward\"", "mode = \"check\"") + "\n[material.3]\nlambda = 2.0\nmu = 3.0\n";
    let cfg = write(dir.path(), "check.toml", &text);
    assert_eq!(run(&["check", cfg.to_str().unwrap()]), 0);
    let table = fs::read_to_string(dir.path().join("out/check.csv")).unwrap();
    for name in ["interface_symmetry_defect", "extension_independence", "zero_slip_collapse"] {
        let line = table.lines().find(|l| l.starts_with(name)).unwrap();
        assert!(line.contains(",true,"), "{line}");
    }
}

#[test]
fn unconverged_inversion_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let text = r#"
mode = "inverse"

[material.1]
lambda = 1.5
mu = 1.0

[material.2]
lambda = 1.5
mu = 1.0

[inverse]
knots = [0.3, 0.5, 0.7]
heights = [0.55, 0.55, 0.55]
true_heights = [0.5, 0.6, 0.5]
slip_modes = 4
true_coeffs = [0.01, 0.005, 0.002, 0.001]
max_iter = 1
"#;
    let cfg = write(dir.path(), "inv.toml", text);
    assert_eq!(run(&["inverse", cfg.to_str().unwrap()]), 2);
    assert!(dir.path().join("out/reconstruction.csv").exists());
    assert!(dir.path().join("out/manifest.toml").exists());
}

#[test]
fn check_runs_on_an_inverse_scenario() {
    let dir = TempDir::new().unwrap();
    let text = r#"
mode = "inverse"

[material.1]
lambda = 1.5
mu = 1.0

[material.2]
lambda = 1.5
mu = 2.0

[inverse]
knots = [0.3, 0.5, 0.7]
heights = [0.55, 0.55, 0.55]
slip_modes = 4
true_heights = [0.55, 0.55, 0.55]
true_coeffs = [0.01, 0.005, 0.002, 0.001]
"#;
    let cfg = write(dir.path(), "inv.toml", text);
    assert_eq!(run(&["check", cfg.to_str().unwrap()]), 0);
    let table = fs::read_to_string(dir.path().join("out/check.csv")).unwrap();
    let line = table.lines().find(|l| l.starts_with("method_equivalence")).unwrap();
    assert!(line.contains(",true,"), "{line}");
}
