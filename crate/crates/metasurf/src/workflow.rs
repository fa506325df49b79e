//! Command pipelines. Each reads a [`RunConfig`], writes its artifacts and a
//! manifest into the output directory, and returns what it computed.

use crate::cell::{compute_coefficients, HomogenizedCoeffs, DESIGN_BAND};
use crate::config::{CellDesign, RunConfig};
use crate::error::Result;
use crate::io::{fmt, write_coefficients, write_table};
use crate::levelset::shape_cell_mesh;
use crate::macroscale::{boundary_energy_flux, boundary_norm, build_macro_mesh, macro_solve as solve, power_imbalance, MacroSolution};
use crate::mesh::{cell_base_mesh, write_vtk, BoundaryTag, ConformOptions, TriMesh, VtkField};
use crate::optimizer::{run, td_perturbation_check, OptimizerState, TdProbe};
use crate::par::{self, Exec};
use crate::reference::{build_comparison, detect_resonance, frequency_sweep, intensity, k0_grid, ResonanceWindow, SweepRow, SWEEP_HEADER};
use crate::C64;
use std::path::PathBuf;
use std::sync::Arc;

pub fn exec(cfg: &RunConfig) -> Exec {
    if cfg.serial {
        Exec::Serial
    } else {
        Exec::Parallel
    }
}

/// Labeled unit-cell mesh of the configured design.
pub fn cell_mesh(cfg: &RunConfig) -> Result<TriMesh> {
    match cfg.design {
        CellDesign::Air => cell_base_mesh(cfg.cell_mesh_n, DESIGN_BAND),
        CellDesign::Shape(s) => shape_cell_mesh(&s, cfg.cell_mesh_n, &ConformOptions::default()),
    }
}

#[derive(Clone, Debug)]
pub struct Homogenized {
    pub coeffs: HomogenizedCoeffs,
    pub coefficients_csv: PathBuf,
    pub cell_vtk: PathBuf,
}

/// Cell problems and coefficients; writes `coefficients.csv` and `cell.vtk`.
pub fn homogenize(cfg: &RunConfig) -> Result<Homogenized> {
    cfg.validate()?;
    cfg.write_manifest("homogenize")?;
    let (sol, coeffs) = compute_coefficients(Arc::new(cell_mesh(cfg)?), &cfg.materials)?;
    let coefficients_csv = cfg.output_dir.join("coefficients.csv");
    write_coefficients(&coefficients_csv, &coeffs)?;
    let cell_vtk = cfg.output_dir.join("cell.vtk");
    let (eta, xi) = (sol.space.vertex_values(&sol.eta), sol.space.vertex_values(&sol.xi));
    write_vtk(&cell_vtk, sol.mesh(), &[VtkField::Scalar("eta", &eta), VtkField::Scalar("xi", &xi)], &[])?;
    Ok(Homogenized { coeffs, coefficients_csv, cell_vtk })
}

pub const FLUX_HEADER: [&str; 3] = ["boundary", "power_w_per_m", "norm_sq_pa2_m"];

#[derive(Clone, Debug)]
pub struct MacroRun {
    pub solution: MacroSolution,
    /// (tag, outgoing power, ∫|P|²) per exterior boundary.
    pub fluxes: Vec<(BoundaryTag, f64, f64)>,
    pub imbalance: f64,
}

fn field_vtk(path: &std::path::Path, space: &crate::fem::FunctionSpace, p: &[C64], rho0: f64, omega: f64) -> Result<()> {
    let v = space.vertex_values(p);
    let re: Vec<f64> = v.iter().map(|z| z.re).collect();
    let im: Vec<f64> = v.iter().map(|z| z.im).collect();
    let abs: Vec<f64> = v.iter().map(|z| z.norm()).collect();
    let i = intensity(space, p, rho0, omega)?;
    let (ix, iy): (Vec<f64>, Vec<f64>) = i.iter().map(|v| (v[0], v[1])).unzip();
    write_vtk(
        path,
        &space.mesh,
        &[VtkField::Scalar("p_re", &re), VtkField::Scalar("p_im", &im), VtkField::Scalar("p_abs", &abs)],
        &[("intensity_x", &ix), ("intensity_y", &iy)],
    )
}

/// Macroscale solve for given coefficients; writes `field_plus.vtk`,
/// `field_minus.vtk` and `flux.csv`.
pub fn macro_solve(cfg: &RunConfig, coeffs: &HomogenizedCoeffs) -> Result<MacroRun> {
    cfg.validate()?;
    cfg.write_manifest("macro-solve")?;
    let mcfg = cfg.macro_config();
    let mesh = build_macro_mesh(&mcfg, cfg.macro_nx, cfg.macro_ny)?;
    let sol = solve(&mesh, coeffs, &mcfg)?;
    let dir = &cfg.output_dir;
    field_vtk(&dir.join("field_plus.vtk"), &sol.spaces.plus, &sol.p_plus, mcfg.rho0, mcfg.omega)?;
    field_vtk(&dir.join("field_minus.vtk"), &sol.spaces.minus, &sol.p_minus, mcfg.rho0, mcfg.omega)?;
    let mut fluxes = Vec::new();
    for tag in std::iter::once(BoundaryTag::Inlet).chain(mcfg.geometry.outlet_tags()) {
        fluxes.push((tag, boundary_energy_flux(&sol, tag)?, boundary_norm(&sol, tag)?));
    }
    let imbalance = power_imbalance(&sol)?;
    let mut rows: Vec<[String; 3]> = fluxes.iter().map(|(t, f, n)| [t.name().to_string(), fmt(*f), fmt(*n)]).collect();
    rows.push(["incident".into(), fmt(mcfg.incident_power()), String::new()]);
    write_table(&dir.join("flux.csv"), &FLUX_HEADER, rows)?;
    if cfg.dump_matrices {
        let sys = crate::macroscale::assemble_macro_system(&mesh, coeffs, &mcfg)?;
        let rows = sys.system.triplets.iter().map(|(i, j, v)| [i.to_string(), j.to_string(), fmt(v.re), fmt(v.im)]);
        write_table(&dir.join("macro_matrix.csv"), &["row", "col", "re", "im"], rows)?;
    }
    Ok(MacroRun { solution: sol, fluxes, imbalance })
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub window: Option<ResonanceWindow>,
    pub dof_ratio: f64,
}

/// Homogenized vs reference over the configured k₀ grid; writes `sweep.csv`.
pub fn sweep(cfg: &RunConfig) -> Result<Sweep> {
    cfg.validate()?;
    cfg.write_manifest("sweep")?;
    let cmp = build_comparison(cell_mesh(cfg)?, &cfg.materials, &cfg.macro_config(), cfg.n_cells, cfg.macro_nx)?;
    let rows = frequency_sweep(&cmp, &k0_grid(cfg.sweep_k0_min, cfg.sweep_k0_max, cfg.sweep_k0_step)?, exec(cfg));
    write_table(&cfg.output_dir.join("sweep.csv"), &SWEEP_HEADER, rows.iter().map(SweepRow::record))?;
    Ok(Sweep { window: detect_resonance(&rows, cfg.resonance_level), rows, dof_ratio: cmp.dof_ratio() })
}

/// Level-set optimization; history, snapshots and the final design go to
/// the output directory.
pub fn optimize(cfg: &RunConfig) -> Result<OptimizerState> {
    cfg.validate()?;
    let ocfg = cfg.optimizer_config()?;
    cfg.write_manifest("optimize")?;
    run(ocfg)
}

pub const TD_HEADER: [&str; 7] = ["y1", "y2", "eps", "direction", "predicted", "observed", "rel_err"];

/// Topological derivative against inclusion insertion at each probe;
/// writes `td_check.csv`.
pub fn td_check(cfg: &RunConfig) -> Result<Vec<TdProbe>> {
    cfg.validate()?;
    let ocfg = cfg.optimizer_config()?;
    cfg.write_manifest("td-check")?;
    let probes = par::map(exec(cfg), &cfg.td_probes, |&p| td_perturbation_check(&ocfg, p, cfg.td_eps)).into_iter().collect::<Result<Vec<_>>>()?;
    let rows = probes.iter().map(|t| {
        [fmt(t.point[0]), fmt(t.point[1]), fmt(t.eps), format!("{:?}", t.direction), fmt(t.predicted), fmt(t.observed), fmt(t.rel_err())]
    });
    write_table(&cfg.output_dir.join("td_check.csv"), &TD_HEADER, rows)?;
    Ok(probes)
}
