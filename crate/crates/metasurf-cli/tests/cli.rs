//! Exit codes and artifacts of the `metasurf` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("metasurf-cli-{}-{name}", std::process::id()));
    std::fs::remove_dir_all(&d).ok();
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn metasurf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metasurf")).args(args).output().unwrap()
}

fn write(path: &Path, text: &str) -> String {
    std::fs::write(path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "[cell]\nmesh_n = 20\n[macro]\nmesh_nx = 20\nmesh_ny = 20\n";

#[test]
fn homogenize_air_cell() {
    let d = dir("air");
    let cfg = write(&d.join("c.ini"), "[cell]\nmesh_n = 20\nshape = air\n");
    let out = metasurf(&["homogenize", "-c", &cfg, "-o", d.join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.join("out/coefficients.csv")).unwrap();
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[0] - 1.0 / 1.2).abs() < 1e-10 && row[1].abs() < 1e-10);
    assert!((row[2] - 1.0 / 1.42e5).abs() < 1e-16 && (row[3] - 1.2).abs() < 1e-10);
    assert!(d.join("out/cell.vtk").exists());
    let manifest = std::fs::read_to_string(d.join("out/manifest.ini")).unwrap();
    assert!(manifest.contains("command = homogenize") && manifest.contains("shape = air"));
    // the manifest is itself a valid config
    let again = metasurf(&["homogenize", "-c", d.join("out/manifest.ini").to_str().unwrap(), "-o", d.join("again").to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(std::fs::read(d.join("out/coefficients.csv")).unwrap(), std::fs::read(d.join("again/coefficients.csv")).unwrap());
    std::fs::remove_dir_all(d).ok();
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let d = dir("bad");
    let cfg = write(&d.join("c.ini"), "[cell]\nmesh_n = 20\nradius_m = 0.3\n");
    let out = metasurf(&["homogenize", "-c", &cfg, "-o", d.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cell.radius_m"));

    let cfg = write(&d.join("c2.ini"), "[frequency]\nk0_per_m = fast\n");
    let out = metasurf(&["homogenize", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frequency.k0_per_m"));

    let out = metasurf(&["homogenize", "-c", d.join("missing.ini").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(d).ok();
}

#[test]
fn macro_solve_reads_coefficients() {
    let d = dir("macro");
    let cfg = write(&d.join("c.ini"), SMALL);
    let coeffs = write(&d.join("k.csv"), "A11,B1,Kinv,F\n0.567,0.26,6.2e-6,1.88\n");
    let out = metasurf(&["macro-solve", "-c", &cfg, "-o", d.join("out").to_str().unwrap(), "--coefficients", &coeffs]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let flux = std::fs::read_to_string(d.join("out/flux.csv")).unwrap();
    assert_eq!(flux.lines().count(), 5);
    assert!(d.join("out/field_minus.vtk").exists());

    let missing = metasurf(&["macro-solve", "-c", &cfg, "-o", d.to_str().unwrap(), "--coefficients", "/nonexistent.csv"]);
    assert_eq!(missing.status.code(), Some(2));

    let zero = write(&d.join("z.csv"), "A11,B1,Kinv,F\n0,0,0,0\n");
    let singular = metasurf(&["macro-solve", "-c", &cfg, "-o", d.join("z").to_str().unwrap(), "--coefficients", &zero]);
    assert_eq!(singular.status.code(), Some(3));
    std::fs::remove_dir_all(d).ok();
}

#[test]
fn strict_optimize_reports_cap() {
    let d = dir("opt");
    let cfg = write(&d.join("c.ini"), &format!("{SMALL}[optimizer]\nmax_iterations = 2\n"));
    let out_dir = d.join("out");
    let lax = metasurf(&["optimize", "-c", &cfg, "-o", out_dir.to_str().unwrap()]);
    assert_eq!(lax.status.code(), Some(0), "{}", String::from_utf8_lossy(&lax.stderr));
    assert_eq!(std::fs::read_to_string(out_dir.join("history.csv")).unwrap().lines().count(), 3);
    let strict = metasurf(&["optimize", "--strict", "-c", &cfg, "-o", d.join("strict").to_str().unwrap()]);
    assert_eq!(strict.status.code(), Some(4));
    std::fs::remove_dir_all(d).ok();
}

#[test]
fn sweep_writes_table() {
    let d = dir("sweep");
    let cfg = write(
        &d.join("c.ini"),
        "[cell]\nmesh_n = 20\nshape = parallelogram\n[macro]\ntemplate = validation\nwidth_m = 0.1\noutlet1_end_m = 0.1\nmesh_nx = 10\nmesh_ny = 10\n\
         [sweep]\nk0_min_per_m = 20\nk0_max_per_m = 22\nk0_step_per_m = 1\nn_cells = 10\n",
    );
    let out = metasurf(&["sweep", "--serial", "-c", &cfg, "-o", d.join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(d.join("out/sweep.csv")).unwrap();
    assert!(table.starts_with("k0,freq_hz,h_hom,h_ref,rel_err\n"));
    assert_eq!(table.lines().count(), 4);
    std::fs::remove_dir_all(d).ok();
}

#[test]
fn unknown_subcommand_is_rejected() {
    assert_ne!(metasurf(&["frobnicate"]).status.code(), Some(0));
}
