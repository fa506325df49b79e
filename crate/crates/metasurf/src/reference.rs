//! Brute-force oracle: the transmission layer meshed as an explicit row of
//! scaled unit cells and the original Helmholtz problem solved on the
//! whole domain.
//!
//! The outer air regions coincide with Ω± of the macro geometry. Near the
//! layer faces the outer mesh starts at the cell resolution and coarsens
//! row by row (halving the node count) up to the macro spacing, then a
//! structured block fills the rest.

use crate::cell::{HomogenizedCoeffs, MaterialPair};
use crate::error::{Error, Result};
use crate::fem::{assemble_matrix, assemble_vector, BlockLayout, Coo, FunctionSpace, Order, Source, SparseSystem, Term};
use crate::macroscale::{boundary_norm, top_tag, MacroConfig, MacroProblem, MacroSolution};
use crate::mesh::{merge_meshes, tensor_mesh, uniform_lines, zipper_strip, BoundaryTag, PointLocator, Scale, Side, TriMesh};
use crate::par::Exec;
use num_complex::Complex64;
use std::sync::Arc;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Abscissae of the layer face: every cell's bottom (or top) nodes, shifted.
fn face_row(cell: &TriMesh, tag: BoundaryTag, n_cells: usize, eps0: f64) -> Vec<f64> {
    let mut local: Vec<f64> = cell.nodes_with_tag(tag).iter().map(|&v| cell.nodes[v][0]).collect();
    local.sort_by(|a, b| a.partial_cmp(b).unwrap());
    local.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut row = Vec::with_capacity(n_cells * local.len());
    for i in 0..n_cells {
        for (k, &x) in local.iter().enumerate() {
            if i > 0 && k == 0 {
                continue;
            }
            row.push(if i + 1 == n_cells && k + 1 == local.len() { n_cells as f64 * eps0 } else { eps0 * (i as f64 + x) });
        }
    }
    row
}

/// Rows from the fine face row out to `nx` uniform intervals, with the
/// distance of each row from the face.
fn transition(fine: Vec<f64>, width: f64, nx: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut rows = vec![fine];
    let mut dist = vec![0.0];
    loop {
        let m = rows.last().unwrap().len() - 1;
        if m <= nx {
            break;
        }
        let next = (m / 2).max(nx);
        let h = (width / m as f64 + width / next as f64) / 2.0;
        dist.push(dist.last().unwrap() + h);
        rows.push(uniform_lines(0.0, width, next));
    }
    (dist, rows)
}

/// Full mesh: Ω⁺, `n_cells` copies of `cell_mesh` scaled to ε₀ x κε₀, and
/// Ω⁻. `nx` is the number of intervals across the width far from the layer.
pub fn build_array_geometry(cell_mesh: &TriMesh, n_cells: usize, cfg: &MacroConfig, nx: usize) -> Result<TriMesh> {
    cfg.validate()?;
    let g = cfg.geometry;
    if n_cells == 0 || nx == 0 {
        return Err(Error::invalid("need at least one cell and one coarse interval"));
    }
    if ((n_cells as f64) * cfg.eps0 - g.width).abs() > 1e-9 * g.width {
        return Err(Error::invalid(format!("{n_cells} cells of size {} do not span the width {}", cfg.eps0, g.width)));
    }
    crate::cell::validate_cell_mesh(cell_mesh)?;
    let (half, depth) = (cfg.delta() / 2.0, g.depth);

    let cells: Vec<TriMesh> = (0..n_cells)
        .map(|i| {
            let mut m = cell_mesh.transformed([i as f64 * cfg.eps0, -half], [cfg.eps0, cfg.delta()], Scale::Macro);
            for e in &mut m.boundary {
                let outer = (e.tag == BoundaryTag::PeriodicLeft && i == 0) || (e.tag == BoundaryTag::PeriodicRight && i + 1 == n_cells);
                if outer {
                    e.tag = BoundaryTag::Wall;
                }
            }
            m
        })
        .collect();

    let bottom = face_row(cell_mesh, BoundaryTag::CellBottom, n_cells, cfg.eps0);
    let top = face_row(cell_mesh, BoundaryTag::CellTop, n_cells, cfg.eps0);
    let (dist_lo, rows_lo) = transition(bottom, g.width, nx);
    let (dist_hi, rows_hi) = transition(top, g.width, nx);
    let (t_lo, t_hi) = (*dist_lo.last().unwrap(), *dist_hi.last().unwrap());
    if t_lo >= depth || t_hi >= depth {
        return Err(Error::invalid("outer domains too shallow for the resolution transition"));
    }
    let ys_lo: Vec<f64> = dist_lo.iter().rev().map(|d| -half - d).collect();
    let rows_lo_rev: Vec<Vec<f64>> = rows_lo.into_iter().rev().collect();
    let ys_hi: Vec<f64> = dist_hi.iter().map(|d| half + d).collect();
    let (inner, wall) = (BoundaryTag::Interface, BoundaryTag::Wall);
    let zip_lo = zipper_strip(&ys_lo, &rows_lo_rev, inner, inner, wall, Scale::Macro)?;
    let zip_hi = zipper_strip(&ys_hi, &rows_hi, inner, inner, wall, Scale::Macro)?;

    let h = g.width / nx as f64;
    let xs = uniform_lines(0.0, g.width, nx);
    let n_lo = (((depth - t_lo) / h).round() as usize).max(1);
    let n_hi = (((depth - t_hi) / h).round() as usize).max(1);
    let plus_tags = |side: Side, _: [f64; 2]| match side {
        Side::Bottom => BoundaryTag::Inlet,
        Side::Top => inner,
        _ => wall,
    };
    let minus_tags = move |side: Side, mid: [f64; 2]| match side {
        Side::Bottom => inner,
        Side::Top => top_tag(&g, mid[0]),
        _ => wall,
    };
    let block_lo = tensor_mesh(&xs, &uniform_lines(-half - depth, -half - t_lo, n_lo), &plus_tags, Scale::Macro)?;
    let block_hi = tensor_mesh(&xs, &uniform_lines(half + t_hi, half + depth, n_hi), &minus_tags, Scale::Macro)?;

    let mut parts: Vec<&TriMesh> = vec![&block_lo, &zip_lo];
    parts.extend(cells.iter());
    parts.push(&zip_hi);
    parts.push(&block_hi);
    let tol = 1e-6 * cfg.eps0 / (cell_mesh.n_nodes() as f64).sqrt();
    let mesh = merge_meshes(&parts, tol)?;
    let interior = [BoundaryTag::Interface, BoundaryTag::CellBottom, BoundaryTag::CellTop, BoundaryTag::PeriodicLeft, BoundaryTag::PeriodicRight];
    if let Some(e) = mesh.boundary.iter().find(|e| interior.contains(&e.tag)) {
        let (a, b) = (mesh.nodes[e.nodes[0]], mesh.nodes[e.nodes[1]]);
        return Err(Error::Mesh(format!(
            "stitching mismatch: unmatched `{}` edge from ({:.6}, {:.6}) to ({:.6}, {:.6})",
            e.tag.name(),
            a[0],
            a[1],
            b[0],
            b[1]
        )));
    }
    for tag in [BoundaryTag::Inlet].into_iter().chain(g.outlet_tags()) {
        mesh.require_tag(tag)?;
    }
    Ok(mesh)
}

/// Frequency-independent matrices of the full problem.
#[derive(Clone, Debug)]
pub struct ReferenceProblem {
    pub space: Arc<FunctionSpace>,
    stiffness: Coo,
    mass: Coo,
    robin: Coo,
    inlet_load: Vec<f64>,
    outlets: Vec<BoundaryTag>,
    pub cfg: MacroConfig,
}

impl ReferenceProblem {
    pub fn new(mesh: TriMesh, materials: &MaterialPair, cfg: &MacroConfig) -> Result<Self> {
        materials.validate()?;
        cfg.validate()?;
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        if !same(materials.rho_air, cfg.rho0) || !same(materials.k_air, cfg.k_bulk0) {
            return Err(Error::invalid("the cell air must be the background medium of the macro configuration"));
        }
        let space = Arc::new(FunctionSpace::new(Arc::new(mesh), Order::P2));
        let outlets = cfg.geometry.outlet_tags();
        let mut robin_terms = vec![Term::BoundaryMass(BoundaryTag::Inlet, 1.0)];
        robin_terms.extend(outlets.iter().map(|&t| Term::BoundaryMass(t, 1.0)));
        Ok(ReferenceProblem {
            stiffness: assemble_matrix(&space, &[Term::Stiffness(materials.inv_rho())])?,
            mass: assemble_matrix(&space, &[Term::Mass(materials.inv_bulk())])?,
            robin: assemble_matrix(&space, &robin_terms)?,
            inlet_load: assemble_vector(&space, &[Source::Boundary(BoundaryTag::Inlet, 1.0)])?,
            outlets,
            space,
            cfg: *cfg,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }

    /// ∫(1/ρ)∇p∇p̃ − ω²∫(1/K)pp̃ + (ik₀/ρ₀)∫_{in ∪ out} pp̃ = (2ik₀/ρ₀)P_in∫_in p̃
    pub fn assemble(&self, k0: f64) -> Result<SparseSystem<Complex64>> {
        let cfg = self.cfg.with_k0(k0);
        cfg.validate()?;
        let mut layout = BlockLayout::new();
        layout.push("p", self.n_dofs());
        let mut sys = SparseSystem::new(layout);
        let robin = I * (cfg.k0 / cfg.rho0);
        sys.add("p", "p", &self.stiffness, Complex64::from(1.0))?;
        sys.add("p", "p", &self.mass, Complex64::from(-cfg.omega * cfg.omega))?;
        sys.add("p", "p", &self.robin, robin)?;
        sys.add_rhs("p", &self.inlet_load, robin * (2.0 * cfg.p_in));
        Ok(sys)
    }

    pub fn solve(&self, k0: f64) -> Result<ReferenceSolution> {
        let sys = self.assemble(k0)?;
        let p = sys.solve()?;
        let residual = sys.relative_residual(&p);
        if !(residual < 1e-8) {
            return Err(Error::Solver(format!("reference solve residual {residual:.3e} too large")));
        }
        Ok(ReferenceSolution { p, residual, space: self.space.clone(), cfg: self.cfg.with_k0(k0), outlets: self.outlets.clone() })
    }
}

#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    pub p: Vec<Complex64>,
    pub residual: f64,
    pub space: Arc<FunctionSpace>,
    pub cfg: MacroConfig,
    outlets: Vec<BoundaryTag>,
}

impl ReferenceSolution {
    pub fn mesh(&self) -> &TriMesh {
        &self.space.mesh
    }

    /// ∫_tag |p|².
    pub fn boundary_norm(&self, tag: BoundaryTag) -> Result<f64> {
        let m = assemble_matrix(&self.space, &[Term::BoundaryMass(tag, 1.0)])?;
        Ok(m.hermitian_form(&self.p))
    }

    /// Power leaving through an inlet or outlet, from the Robin condition.
    pub fn energy_flux(&self, tag: BoundaryTag) -> Result<f64> {
        let cfg = &self.cfg;
        let scale = cfg.k0 / (2.0 * cfg.omega * cfg.rho0);
        match tag {
            BoundaryTag::Inlet => {
                let load = assemble_vector(&self.space, &[Source::Boundary(tag, 1.0)])?;
                let mean: Complex64 = load.iter().zip(&self.p).map(|(w, p)| p * *w).sum();
                Ok(scale * (self.boundary_norm(tag)? - 2.0 * cfg.p_in * mean.re))
            }
            t if self.outlets.contains(&t) => Ok(scale * self.boundary_norm(t)?),
            other => Err(Error::invalid(format!("`{}` is not an inlet or outlet of this problem", other.name()))),
        }
    }

    /// |inflow − outflow| / incident power.
    pub fn power_imbalance(&self) -> Result<f64> {
        let inflow = -self.energy_flux(BoundaryTag::Inlet)?;
        let mut out = 0.0;
        for &t in &self.outlets {
            out += self.energy_flux(t)?;
        }
        Ok((inflow - out).abs() / self.cfg.incident_power())
    }

    /// Measurement functional ∫_{Γmeas}|p|² over all outlets.
    pub fn h_meas(&self) -> Result<f64> {
        self.outlets.iter().map(|&t| self.boundary_norm(t)).sum()
    }
}

/// Assemble and solve the full problem on an array mesh.
pub fn solve_reference(mesh: TriMesh, materials: &MaterialPair, cfg: &MacroConfig) -> Result<ReferenceSolution> {
    ReferenceProblem::new(mesh, materials, cfg)?.solve(cfg.k0)
}

/// Homogenized measurement functional, same Γmeas as `ReferenceSolution::h_meas`.
pub fn h_meas_macro(sol: &MacroSolution) -> Result<f64> {
    sol.cfg.geometry.outlet_tags().into_iter().map(|t| boundary_norm(sol, t)).sum()
}

/// Relative pointwise errors at the vertices of Ω⁺ and Ω⁻.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorField {
    pub e_plus: Vec<f64>,
    pub e_minus: Vec<f64>,
}

impl ErrorField {
    pub fn max_plus(&self) -> f64 {
        self.e_plus.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_minus(&self) -> f64 {
        self.e_minus.iter().copied().fold(0.0, f64::max)
    }

    pub fn max(&self) -> f64 {
        self.max_plus().max(self.max_minus())
    }
}

/// e± = |Re P± − Re p_ref| / mean|Re P±|, the mean taken over the vertices
/// of each half-domain; p_ref is interpolated at the macro vertices.
pub fn error_field(macro_sol: &MacroSolution, reference: &ReferenceSolution) -> Result<ErrorField> {
    let locator = PointLocator::new(reference.mesh());
    let (rlo, rhi) = reference.mesh().bounding_box();
    let side = |space: &FunctionSpace, u: &[Complex64]| -> Result<Vec<f64>> {
        let vals = space.vertex_values(u);
        let mesh = &space.mesh;
        let (lo, hi) = mesh.bounding_box();
        let tol = 1e-9 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
        if lo[0] < rlo[0] - tol || lo[1] < rlo[1] - tol || hi[0] > rhi[0] + tol || hi[1] > rhi[1] + tol {
            return Err(Error::invalid("macro domain is not covered by the reference mesh"));
        }
        let mut diff = Vec::with_capacity(vals.len());
        for (v, p) in mesh.nodes.iter().enumerate() {
            let (t, l) = locator.locate(*p).ok_or_else(|| Error::Mesh(format!("point ({}, {}) not in the reference mesh", p[0], p[1])))?;
            let r = reference.space.eval_c(&reference.p, t, l);
            diff.push((vals[v].re - r.re).abs());
        }
        let mean = vals.iter().map(|z| z.re.abs()).sum::<f64>() / vals.len() as f64;
        if !(mean > 0.0) {
            return Err(Error::invalid("macro field vanishes; relative error undefined"));
        }
        Ok(diff.into_iter().map(|d| d / mean).collect())
    };
    let s = &macro_sol.spaces;
    Ok(ErrorField { e_plus: side(&s.plus, &macro_sol.p_plus)?, e_minus: side(&s.minus, &macro_sol.p_minus)? })
}

/// Time-averaged intensity ½Re(p·conj(u)), u = −∇p/(iωρ₀), at each
/// triangle centroid.
pub fn intensity(space: &FunctionSpace, p: &[Complex64], rho0: f64, omega: f64) -> Result<Vec<[f64; 2]>> {
    if !(omega > 0.0 && rho0 > 0.0) {
        return Err(Error::invalid("intensity needs positive omega and density"));
    }
    let c = [1.0 / 3.0; 3];
    Ok((0..space.mesh.n_triangles())
        .map(|t| {
            let v = space.eval_c(p, t, c);
            let g = space.grad_c(p, t, c);
            let f = |d: Complex64| {
                let u = -d / (I * omega * rho0);
                0.5 * (v * u.conj()).re
            };
            [f(g[0]), f(g[1])]
        })
        .collect())
}

/// One row of the frequency sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub k0: f64,
    pub freq_hz: f64,
    pub h_hom: f64,
    pub h_ref: f64,
    pub rel_err: f64,
}

pub const SWEEP_HEADER: [&str; 5] = ["k0", "freq_hz", "h_hom", "h_ref", "rel_err"];

impl SweepRow {
    pub fn record(&self) -> [String; 5] {
        [self.k0, self.freq_hz, self.h_hom, self.h_ref, self.rel_err].map(crate::io::fmt)
    }
}

/// Homogenized and full problems for one cell design, reusable across
/// frequencies.
pub struct Comparison {
    pub coeffs: HomogenizedCoeffs,
    pub macro_problem: MacroProblem,
    pub reference: ReferenceProblem,
    pub cfg: MacroConfig,
    /// DOFs of the cell problem (counted once in the homogenized total).
    pub cell_dofs: usize,
}

impl Comparison {
    pub fn homogenized_dofs(&self) -> usize {
        self.macro_problem.spaces.n_dofs() + self.cell_dofs
    }

    pub fn dof_ratio(&self) -> f64 {
        self.reference.n_dofs() as f64 / self.homogenized_dofs() as f64
    }

    pub fn at(&self, k0: f64) -> Result<(MacroSolution, ReferenceSolution)> {
        let cfg = self.cfg.with_k0(k0);
        Ok((self.macro_problem.solve(&self.coeffs, &cfg)?, self.reference.solve(k0)?))
    }

    fn row(&self, k0: f64) -> SweepRow {
        let freq_hz = self.cfg.with_k0(k0).omega / (2.0 * std::f64::consts::PI);
        let both = self.at(k0).and_then(|(m, r)| Ok((h_meas_macro(&m)?, r.h_meas()?)));
        match both {
            Ok((h_hom, h_ref)) => SweepRow { k0, freq_hz, h_hom, h_ref, rel_err: (h_hom - h_ref).abs() / h_ref },
            Err(_) => SweepRow { k0, freq_hz, h_hom: f64::NAN, h_ref: f64::NAN, rel_err: f64::NAN },
        }
    }
}

/// Cell solve, macro problem and full array mesh for one design.
/// `macro_n` sets both the macro mesh density and the far-field density of
/// the reference mesh.
pub fn build_comparison(cell_mesh: TriMesh, materials: &MaterialPair, cfg: &MacroConfig, n_cells: usize, macro_n: usize) -> Result<Comparison> {
    let cell_mesh = Arc::new(cell_mesh);
    let (sol, coeffs) = crate::cell::compute_coefficients(cell_mesh.clone(), materials)?;
    let macro_mesh = crate::macroscale::build_macro_mesh(cfg, macro_n, macro_n)?;
    let macro_problem = MacroProblem::new(&macro_mesh, cfg)?;
    let full = build_array_geometry(&cell_mesh, n_cells, cfg, macro_n)?;
    let reference = ReferenceProblem::new(full, materials, cfg)?;
    Ok(Comparison { coeffs, macro_problem, reference, cfg: *cfg, cell_dofs: sol.space.n_dofs() })
}

/// h^H and h^Ref over a list of wavenumbers. A failed frequency yields a
/// NaN row and the sweep continues.
pub fn frequency_sweep(cmp: &Comparison, k0s: &[f64], exec: Exec) -> Vec<SweepRow> {
    crate::par::map(exec, k0s, |&k| cmp.row(k))
}

/// `a, a + step, ...` up to and including `b` (within round-off).
pub fn k0_grid(a: f64, b: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && b >= a && a > 0.0) {
        return Err(Error::invalid(format!("bad wavenumber range [{a}, {b}] step {step}")));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| a + step * i as f64).collect())
}

/// Wavenumber band excluded as resonant, and its worst row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceWindow {
    pub k_lo: f64,
    pub k_hi: f64,
    pub k_peak: f64,
    pub peak_err: f64,
}

/// Contiguous rows around the largest relative error in which the error
/// stays above `level`, widened by one grid step on each side. Only this
/// single band is excluded; any other elevated row counts as non-resonant.
pub fn detect_resonance(rows: &[SweepRow], level: f64) -> Option<ResonanceWindow> {
    let (ip, peak) = rows.iter().enumerate().filter(|(_, r)| r.rel_err.is_finite()).max_by(|a, b| a.1.rel_err.partial_cmp(&b.1.rel_err).unwrap())?;
    if peak.rel_err <= level {
        return None;
    }
    let above = |i: usize| rows[i].rel_err.is_finite() && rows[i].rel_err > level;
    let (mut lo, mut hi) = (ip, ip);
    while lo > 0 && above(lo - 1) {
        lo -= 1;
    }
    while hi + 1 < rows.len() && above(hi + 1) {
        hi += 1;
    }
    // one grid step of margin on each side
    let k_lo = rows[lo.saturating_sub(1)].k0;
    let k_hi = rows[(hi + 1).min(rows.len() - 1)].k0;
    Some(ResonanceWindow { k_lo, k_hi, k_peak: peak.k0, peak_err: peak.rel_err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::DESIGN_BAND;
    use crate::macroscale::MacroGeometry;
    use crate::mesh::cell_base_mesh;

    fn air_cell(n: usize) -> TriMesh {
        cell_base_mesh(n, DESIGN_BAND).unwrap()
    }

    #[test]
    fn single_cell_counts() {
        let mut cfg = MacroConfig::from_k0(25.0, MacroGeometry::validation());
        cfg.geometry.width = cfg.eps0;
        cfg.geometry.depth = 0.05;
        cfg.geometry.outlet1 = (0.0, cfg.eps0);
        let cell = air_cell(10);
        let full = build_array_geometry(&cell, 1, &cfg, 1).unwrap();
        assert!((full.total_area() - cfg.eps0 * (2.0 * 0.05 + cfg.delta())).abs() < 1e-12);
        assert!(full.n_triangles() > cell.n_triangles());
        full.validate().unwrap();
    }

    #[test]
    fn wrong_cell_count_rejected() {
        let cfg = MacroConfig::from_k0(25.0, MacroGeometry::validation());
        assert!(build_array_geometry(&air_cell(10), 49, &cfg, 10).is_err());
    }

    #[test]
    fn plane_wave_intensity() {
        let cfg = MacroConfig::from_k0(25.0, MacroGeometry::validation());
        let mesh = crate::mesh::generate_rect_mesh(0.5, 0.5, 40, 40, &crate::mesh::SideTags::all(BoundaryTag::Wall)).unwrap();
        let space = FunctionSpace::new(Arc::new(mesh), Order::P2);
        let mut p = vec![Complex64::default(); space.n_dofs()];
        let re = space.interpolate(|x| (cfg.k0 * x[0]).cos());
        let im = space.interpolate(|x| -(cfg.k0 * x[0]).sin());
        for i in 0..p.len() {
            p[i] = Complex64::new(re[i], im[i]);
        }
        let int = intensity(&space, &p, cfg.rho0, cfg.omega).unwrap();
        let expect = 1.0 / (2.0 * cfg.rho0 * cfg.c0());
        for v in &int {
            assert!((v[0] - expect).abs() < 5e-3 * expect, "{v:?}");
            assert!(v[1].abs() < 5e-3 * expect);
        }
        let conj: Vec<Complex64> = p.iter().map(|z| z.conj()).collect();
        let neg = intensity(&space, &conj, cfg.rho0, cfg.omega).unwrap();
        for (a, b) in int.iter().zip(&neg) {
            assert!((a[0] + b[0]).abs() < 1e-15 && (a[1] + b[1]).abs() < 1e-15);
        }
        assert!(intensity(&space, &p, cfg.rho0, 0.0).is_err());
    }

    #[test]
    fn resonance_window_grows_from_peak() {
        let row = |k0: f64, e: f64| SweepRow { k0, freq_hz: 0.0, h_hom: 1.0, h_ref: 1.0, rel_err: e };
        let rows = [row(1.0, 0.01), row(2.0, 0.02), row(3.0, 0.3), row(4.0, 0.9), row(5.0, 0.1), row(6.0, 0.01), row(7.0, 0.2)];
        let w = detect_resonance(&rows, 0.05).unwrap();
        assert_eq!((w.k_lo, w.k_hi, w.k_peak), (2.0, 6.0, 4.0));
        assert!(detect_resonance(&rows[..2], 0.05).is_none());
    }
}
