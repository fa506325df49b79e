//! End-to-end checks of the adjoint, optimizer and command pipelines on
//! coarse meshes.

use metasurf::adjoint::solve_macro_adjoint;
use metasurf::cell::HomogenizedCoeffs;
use metasurf::config::{CellDesign, RunConfig};
use metasurf::io::{read_coefficients, read_table};
use metasurf::levelset::{shape_cell_mesh, Shape};
use metasurf::macroscale::MacroGeometry;
use metasurf::mesh::ConformOptions;
use metasurf::optimizer::{is_striped, Evaluator, ObjectiveSpec, Optimizer, OptimizerConfig, HISTORY_HEADER};
use metasurf::workflow;
use std::path::PathBuf;
use std::sync::Arc;

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("metasurf-pipeline-{}-{name}", std::process::id()));
    std::fs::remove_dir_all(&d).ok();
    d
}

fn small() -> OptimizerConfig {
    OptimizerConfig { cell_n: 20, macro_nx: 20, macro_ny: 20, ..OptimizerConfig::default() }
}

fn cell(shape: Shape) -> Arc<metasurf::mesh::TriMesh> {
    Arc::new(shape_cell_mesh(&shape, 20, &ConformOptions::default()).unwrap())
}

#[test]
fn multipliers_match_central_differences() {
    let cfg = small();
    let mut ev = Evaluator::new(cfg.materials, cfg.macro_config(), 20, 20, ObjectiveSpec::case1(0.5)).unwrap();
    let eval = ev.evaluate(cell(Shape::validation_parallelogram())).unwrap();
    let adj = solve_macro_adjoint(&eval.state, &ev.objective).unwrap();
    assert!(adj.residual < 1e-10);
    let lam = ev.multipliers(&eval.state).unwrap().as_array();
    let base = eval.coeffs.as_array();
    for k in 0..4 {
        let h = 1e-6 * base[k].abs();
        let at = |d: f64| {
            let mut v = base;
            v[k] += d;
            ev.objective_of(&HomogenizedCoeffs { a11: v[0], b1: v[1], kinv: v[2], f: v[3] }).unwrap()
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        assert!((lam[k] - fd).abs() < 1e-5 * fd.abs(), "coefficient {k}: λ = {} vs FD {fd}", lam[k]);
    }
}

#[test]
fn objective_starts_at_zero_and_needs_capture() {
    let cfg = small();
    let mut ev = Evaluator::new(cfg.materials, cfg.macro_config(), 20, 20, ObjectiveSpec::case1(0.5)).unwrap();
    let c = HomogenizedCoeffs::homogeneous(1.2, 1.42e5);
    assert!(ev.objective_of(&c).is_err());
    let eval = ev.evaluate(cell(Shape::Circle { center: [0.5, 0.5], radius: 0.3 })).unwrap();
    assert_eq!(eval.value.j, 0.0);
    assert!(ev.objective.is_captured());
}

#[test]
fn objective_outlets_must_exist() {
    let cfg = OptimizerConfig { geometry: MacroGeometry::validation(), ..small() };
    assert!(Optimizer::new(cfg).is_err());
    assert!(Optimizer::new(OptimizerConfig { max_iterations: 0, ..small() }).is_err());
}

#[test]
fn short_run_writes_history_and_design() {
    let dir = tmp("opt");
    let cfg = OptimizerConfig { max_iterations: 3, snapshot_every: 2, output_dir: Some(dir.clone()), ..small() };
    let st = Optimizer::new(cfg).unwrap().run().unwrap();
    assert_eq!(st.iteration, 3);
    assert!(!st.converged);
    // the moving-average column stays empty before 11 iterations
    let text = std::fs::read_to_string(dir.join("history.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').collect::<Vec<_>>(), HISTORY_HEADER);
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').take(8).map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], 0.0);
    for f in ["phi_00000.vtk", "design_00002.vtk", "phi_final.vtk", "design_final.vtk", "coefficients.csv"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let c = read_coefficients(&dir.join("coefficients.csv")).unwrap();
    assert_eq!(c, st.history.last().unwrap().coeffs);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn stripe_heuristic() {
    let band = Shape::Parallelogram { center: [0.5, 0.5], width: 1.0, height: 0.2, shear: 0.0 };
    assert!(is_striped(&cell(band)));
    assert!(!is_striped(&cell(Shape::Circle { center: [0.5, 0.5], radius: 0.3 })));
    let tall = Shape::Parallelogram { center: [0.5, 0.5], width: 0.3, height: 0.8, shear: 0.0 };
    assert!(!is_striped(&cell(tall)));
}

fn run_config(name: &str) -> RunConfig {
    RunConfig { cell_mesh_n: 20, macro_nx: 20, macro_ny: 20, output_dir: tmp(name), ..RunConfig::default() }
}

#[test]
fn homogenize_command_reproduces_from_manifest() {
    let cfg = RunConfig { design: CellDesign::Air, ..run_config("hom") };
    let h = workflow::homogenize(&cfg).unwrap();
    assert!((h.coeffs.a11 - 1.0 / 1.2).abs() < 1e-10);
    assert!(h.cell_vtk.exists());
    let again = RunConfig { output_dir: tmp("hom2"), ..RunConfig::load(&cfg.output_dir.join("manifest.ini")).unwrap() };
    workflow::homogenize(&again).unwrap();
    assert_eq!(std::fs::read(h.coefficients_csv).unwrap(), std::fs::read(again.output_dir.join("coefficients.csv")).unwrap());
    std::fs::remove_dir_all(cfg.output_dir).ok();
    std::fs::remove_dir_all(again.output_dir).ok();
}

#[test]
fn macro_command_balances_power() {
    let cfg = run_config("macro");
    let coeffs = HomogenizedCoeffs { a11: 0.567, b1: 0.26, kinv: 6.2e-6, f: 1.88 };
    let r = workflow::macro_solve(&cfg, &coeffs).unwrap();
    assert!(r.imbalance < 1e-9);
    assert_eq!(r.fluxes.len(), 3);
    let text = std::fs::read_to_string(cfg.output_dir.join("flux.csv")).unwrap();
    assert!(text.starts_with("boundary,power_w_per_m,norm_sq_pa2_m\ninlet,"));
    for f in ["field_plus.vtk", "field_minus.vtk", "manifest.ini"] {
        assert!(cfg.output_dir.join(f).exists(), "{f}");
    }
    std::fs::remove_dir_all(cfg.output_dir).ok();
}

#[test]
fn sweep_command_on_a_short_array() {
    let mut cfg = run_config("sweep");
    cfg.design = CellDesign::Shape(Shape::validation_parallelogram());
    cfg.geometry = MacroGeometry { width: 0.1, ..MacroGeometry::validation() };
    cfg.geometry.outlet1 = (0.0, 0.1);
    cfg.n_cells = 10;
    cfg.macro_nx = 10;
    cfg.macro_ny = 10;
    cfg.sweep_k0_min = 10.0;
    cfg.sweep_k0_max = 30.0;
    cfg.sweep_k0_step = 10.0;
    let s = workflow::sweep(&cfg).unwrap();
    assert_eq!(s.rows.len(), 3);
    assert!(s.rows.iter().all(|r| r.rel_err < 0.05), "{:?}", s.rows);
    let (header, rows) = read_table(&cfg.output_dir.join("sweep.csv")).unwrap();
    assert_eq!(header, ["k0", "freq_hz", "h_hom", "h_ref", "rel_err"]);
    assert_eq!(rows.len(), 3);
    std::fs::remove_dir_all(cfg.output_dir).ok();
}

#[test]
fn optimize_requires_a_shape() {
    let cfg = RunConfig { design: CellDesign::Air, ..run_config("noshape") };
    assert!(matches!(workflow::optimize(&cfg), Err(metasurf::Error::Config(_))));
}
