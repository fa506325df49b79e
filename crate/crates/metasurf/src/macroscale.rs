//! Homogenized macroscale problem: two Helmholtz half-domains coupled
//! through the interface line Γ⁰.
//!
//! Ω⁺ lies below the layer with the inlet on its bottom, Ω⁻ above it with
//! the outlets on its top; x₂ points from Ω⁺ to Ω⁻. Unknowns are ordered
//! (P⁺, P⁻, p⁰, G⁺, G⁻) with P², p⁰ in P2 and G± = (1/ρ₀)∂P±/∂x₂ in P1.
//! Rows of the G⁺ block hold the jump equation and rows of the G⁻ block the
//! mean-value equation.

use crate::cell::HomogenizedCoeffs;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_line, assemble_matrix, assemble_vector, BlockLayout, Coo, FunctionSpace, LineMesh, LineOp, LineSpace, Order,
    RegionCoef, SegmentDofs, Source, SparseSystem, Term,
};
use crate::mesh::{generate_rect_mesh, uniform_lines, BoundaryTag, Scale, Side, TriMesh};
use num_complex::Complex64;
use std::sync::Arc;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Geometry template of the macro domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Template {
    /// One outlet spanning the whole top of Ω⁻.
    Validation,
    /// Two outlets on the top of Ω⁻ separated by a wall segment.
    Design,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacroGeometry {
    pub template: Template,
    /// Length of Γ⁰ (= width of Ω±), m.
    pub width: f64,
    /// Depth of each half-domain, m.
    pub depth: f64,
    /// x₁ extent of the outlets, m (the validation template uses only the first).
    pub outlet1: (f64, f64),
    pub outlet2: (f64, f64),
}

impl MacroGeometry {
    pub fn validation() -> Self {
        MacroGeometry { template: Template::Validation, width: 0.5, depth: 0.5, outlet1: (0.0, 0.5), outlet2: (0.0, 0.0) }
    }

    pub fn design() -> Self {
        MacroGeometry { template: Template::Design, width: 0.5, depth: 0.5, outlet1: (0.0, 0.2), outlet2: (0.3, 0.5) }
    }

    pub fn outlet_tags(&self) -> Vec<BoundaryTag> {
        match self.template {
            Template::Validation => vec![BoundaryTag::Outlet1],
            Template::Design => vec![BoundaryTag::Outlet1, BoundaryTag::Outlet2],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacroConfig {
    pub omega: f64,
    pub k0: f64,
    pub p_in: f64,
    pub eps0: f64,
    pub kappa: f64,
    pub rho0: f64,
    pub k_bulk0: f64,
    pub geometry: MacroGeometry,
}

impl MacroConfig {
    /// Air background at wavenumber `k0` (ω follows from k₀ = ω√(ρ₀/K₀)).
    pub fn from_k0(k0: f64, geometry: MacroGeometry) -> Self {
        let (rho0, k_bulk0): (f64, f64) = (1.2, 1.42e5);
        MacroConfig { omega: k0 * (k_bulk0 / rho0).sqrt(), k0, p_in: 1.0, eps0: 0.01, kappa: 1.0, rho0, k_bulk0, geometry }
    }

    /// Same configuration at another wavenumber.
    pub fn with_k0(&self, k0: f64) -> Self {
        MacroConfig { k0, omega: k0 * self.c0(), ..*self }
    }

    pub fn c0(&self) -> f64 {
        (self.k_bulk0 / self.rho0).sqrt()
    }

    /// Layer thickness κ·ε₀.
    pub fn delta(&self) -> f64 {
        self.kappa * self.eps0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0) {
            return Err(Error::invalid(format!("eps0 must be positive, got {}", self.eps0)));
        }
        if !(self.rho0 > 0.0 && self.k_bulk0 > 0.0 && self.omega > 0.0 && self.kappa > 0.0) {
            return Err(Error::invalid("rho0, K0, omega and kappa must be positive"));
        }
        let k = self.omega * (self.rho0 / self.k_bulk0).sqrt();
        if (k - self.k0).abs() > 1e-9 * self.k0.abs().max(1.0) {
            return Err(Error::invalid(format!("k0 = {} inconsistent with omega (expected {k})", self.k0)));
        }
        let g = &self.geometry;
        if !(g.width > 0.0 && g.depth > 0.0) {
            return Err(Error::invalid("macro width and depth must be positive"));
        }
        let ok = |o: (f64, f64)| 0.0 <= o.0 && o.0 < o.1 && o.1 <= g.width;
        if !ok(g.outlet1) {
            return Err(Error::invalid("outlet 1 must be a nonempty interval on the top side"));
        }
        if g.template == Template::Design {
            if !ok(g.outlet2) || g.outlet1.1 > g.outlet2.0 {
                return Err(Error::invalid("design outlets must be disjoint, ordered intervals on the top side"));
            }
        }
        Ok(())
    }

    /// Power carried by the incident plane wave through the inlet.
    pub fn incident_power(&self) -> f64 {
        self.p_in * self.p_in * self.geometry.width / (2.0 * self.rho0 * self.c0())
    }
}

/// Ω⁺, Ω⁻ (separate node sets) and the 1-D mesh of Γ⁰.
#[derive(Clone, Debug)]
pub struct MacroMesh {
    pub plus: Arc<TriMesh>,
    pub minus: Arc<TriMesh>,
    pub gamma0: LineMesh,
}

/// Structured macro mesh with `nx` intervals along Γ⁰ and `ny` across each
/// half-domain. Outlet bounds must fall on grid lines.
pub fn build_macro_mesh(cfg: &MacroConfig, nx: usize, ny: usize) -> Result<MacroMesh> {
    cfg.validate()?;
    let g = cfg.geometry;
    let half = cfg.delta() / 2.0;
    let plus_tags = |side: Side, _: [f64; 2]| match side {
        Side::Bottom => BoundaryTag::Inlet,
        Side::Top => BoundaryTag::Interface,
        _ => BoundaryTag::Wall,
    };
    let plus = generate_rect_mesh(g.width, g.depth, nx, ny, &plus_tags)?.transformed([0.0, -half - g.depth], [1.0, 1.0], Scale::Macro);
    let xs = uniform_lines(0.0, g.width, nx);
    let bounds: &[f64] = match g.template {
        Template::Validation => &[g.outlet1.0, g.outlet1.1],
        Template::Design => &[g.outlet1.0, g.outlet1.1, g.outlet2.0, g.outlet2.1],
    };
    for &b in bounds {
        if !xs.iter().any(|x| (x - b).abs() < 1e-9 * g.width) {
            return Err(Error::invalid(format!("outlet bound {b} is not a grid line for nx = {nx}")));
        }
    }
    let minus_tags = move |side: Side, mid: [f64; 2]| match side {
        Side::Bottom => BoundaryTag::Interface,
        Side::Top => top_tag(&g, mid[0]),
        _ => BoundaryTag::Wall,
    };
    let minus = generate_rect_mesh(g.width, g.depth, nx, ny, &minus_tags)?.transformed([0.0, half], [1.0, 1.0], Scale::Macro);
    Ok(MacroMesh { plus: Arc::new(plus), minus: Arc::new(minus), gamma0: LineMesh::new(xs)? })
}

/// Tag of the top side of Ω⁻ at abscissa x.
pub fn top_tag(g: &MacroGeometry, x: f64) -> BoundaryTag {
    match g.template {
        _ if x > g.outlet1.0 && x < g.outlet1.1 => BoundaryTag::Outlet1,
        Template::Validation => BoundaryTag::Wall,
        Template::Design => {
            if x > g.outlet2.0 && x < g.outlet2.1 {
                BoundaryTag::Outlet2
            } else {
                BoundaryTag::Wall
            }
        }
    }
}

/// Spaces shared by the state and adjoint systems.
#[derive(Clone, Debug)]
pub struct MacroSpaces {
    pub mesh: MacroMesh,
    pub plus: FunctionSpace,
    pub minus: FunctionSpace,
    pub p0: SegmentDofs,
    pub g: SegmentDofs,
    pub trace_plus: SegmentDofs,
    pub trace_minus: SegmentDofs,
}

impl MacroSpaces {
    pub fn new(mesh: &MacroMesh) -> Result<Self> {
        let plus = FunctionSpace::new(mesh.plus.clone(), Order::P2);
        let minus = FunctionSpace::new(mesh.minus.clone(), Order::P2);
        // the interface must exist on both sides as its own node layer
        let trace_plus = plus.trace(BoundaryTag::Interface, &mesh.gamma0)?;
        let trace_minus = minus.trace(BoundaryTag::Interface, &mesh.gamma0)?;
        let p0 = LineSpace::new(&mesh.gamma0, Order::P2).segments();
        let g = LineSpace::new(&mesh.gamma0, Order::P1).segments();
        Ok(MacroSpaces { mesh: mesh.clone(), plus, minus, p0, g, trace_plus, trace_minus })
    }

    pub fn layout(&self) -> BlockLayout {
        let mut l = BlockLayout::new();
        l.push("P+", self.plus.n_dofs());
        l.push("P-", self.minus.n_dofs());
        l.push("p0", self.p0.n_dofs);
        l.push("G+", self.g.n_dofs);
        l.push("G-", self.g.n_dofs);
        l
    }

    pub fn n_dofs(&self) -> usize {
        self.layout().n()
    }
}

/// Real matrices that do not depend on the coefficients or the frequency.
#[derive(Clone, Debug)]
pub(crate) struct MacroBlocks {
    pub stiff_plus: Coo,
    pub mass_plus: Coo,
    pub inlet: Coo,
    pub stiff_minus: Coo,
    pub mass_minus: Coo,
    pub outlet: Coo,
    pub inlet_load: Vec<f64>,
    /// Γ⁰ operators; names read (trial, test, op).
    pub p0_p0_dd: Coo,
    pub p0_p0_m: Coo,
    pub g_p0_testdx: Coo,
    pub g_p0_m: Coo,
    pub p0_g_trialdx: Coo,
    pub g_g_m: Coo,
    pub tp_g_m: Coo,
    pub tm_g_m: Coo,
    pub p0_g_m: Coo,
    pub g_tp_m: Coo,
    pub g_tm_m: Coo,
}

impl MacroBlocks {
    pub fn new(s: &MacroSpaces, cfg: &MacroConfig) -> Result<Self> {
        let one = RegionCoef::uniform(1.0);
        let outlets: Vec<Term> = cfg.geometry.outlet_tags().into_iter().map(|t| Term::BoundaryMass(t, 1.0)).collect();
        let line = &s.mesh.gamma0;
        Ok(MacroBlocks {
            stiff_plus: assemble_matrix(&s.plus, &[Term::Stiffness(one)])?,
            mass_plus: assemble_matrix(&s.plus, &[Term::Mass(one)])?,
            inlet: assemble_matrix(&s.plus, &[Term::BoundaryMass(BoundaryTag::Inlet, 1.0)])?,
            stiff_minus: assemble_matrix(&s.minus, &[Term::Stiffness(one)])?,
            mass_minus: assemble_matrix(&s.minus, &[Term::Mass(one)])?,
            outlet: assemble_matrix(&s.minus, &outlets)?,
            inlet_load: assemble_vector(&s.plus, &[Source::Boundary(BoundaryTag::Inlet, 1.0)])?,
            p0_p0_dd: assemble_line(line, &s.p0, &s.p0, LineOp::DxDx, 1.0),
            p0_p0_m: assemble_line(line, &s.p0, &s.p0, LineOp::Mass, 1.0),
            g_p0_testdx: assemble_line(line, &s.g, &s.p0, LineOp::TestDx, 1.0),
            g_p0_m: assemble_line(line, &s.g, &s.p0, LineOp::Mass, 1.0),
            p0_g_trialdx: assemble_line(line, &s.p0, &s.g, LineOp::TrialDx, 1.0),
            g_g_m: assemble_line(line, &s.g, &s.g, LineOp::Mass, 1.0),
            tp_g_m: assemble_line(line, &s.trace_plus, &s.g, LineOp::Mass, 1.0),
            tm_g_m: assemble_line(line, &s.trace_minus, &s.g, LineOp::Mass, 1.0),
            p0_g_m: assemble_line(line, &s.p0, &s.g, LineOp::Mass, 1.0),
            g_tp_m: assemble_line(line, &s.g, &s.trace_plus, LineOp::Mass, 1.0),
            g_tm_m: assemble_line(line, &s.g, &s.trace_minus, LineOp::Mass, 1.0),
        })
    }
}

/// Assembled state system with the spaces needed to read it back.
#[derive(Clone, Debug)]
pub struct MacroSystem {
    pub system: SparseSystem<Complex64>,
    pub spaces: Arc<MacroSpaces>,
    pub(crate) blocks: Arc<MacroBlocks>,
    pub coeffs: HomogenizedCoeffs,
    pub cfg: MacroConfig,
}

/// Spaces and coefficient-independent matrices of one macro mesh; reused
/// across frequencies and optimization iterations.
#[derive(Clone, Debug)]
pub struct MacroProblem {
    pub spaces: Arc<MacroSpaces>,
    pub(crate) blocks: Arc<MacroBlocks>,
    geometry: MacroGeometry,
}

impl MacroProblem {
    pub fn new(mesh: &MacroMesh, cfg: &MacroConfig) -> Result<Self> {
        cfg.validate()?;
        let spaces = Arc::new(MacroSpaces::new(mesh)?);
        let blocks = Arc::new(MacroBlocks::new(&spaces, cfg)?);
        Ok(MacroProblem { spaces, blocks, geometry: cfg.geometry })
    }

    pub fn assemble(&self, coeffs: &HomogenizedCoeffs, cfg: &MacroConfig) -> Result<MacroSystem> {
        cfg.validate()?;
        if cfg.geometry != self.geometry {
            return Err(Error::invalid("configuration geometry differs from the one the problem was built for"));
        }
        assemble_with(self, coeffs, cfg)
    }

    pub fn solve(&self, coeffs: &HomogenizedCoeffs, cfg: &MacroConfig) -> Result<MacroSolution> {
        solve_macro(&self.assemble(coeffs, cfg)?)
    }
}

/// Monolithic complex system of the five coupled equations.
pub fn assemble_macro_system(mesh: &MacroMesh, coeffs: &HomogenizedCoeffs, cfg: &MacroConfig) -> Result<MacroSystem> {
    MacroProblem::new(mesh, cfg)?.assemble(coeffs, cfg)
}

fn assemble_with(problem: &MacroProblem, coeffs: &HomogenizedCoeffs, cfg: &MacroConfig) -> Result<MacroSystem> {
    let (spaces, b) = (problem.spaces.clone(), &*problem.blocks);
    let mut sys = SparseSystem::<Complex64>::new(spaces.layout());
    let (rho0, w2) = (cfg.rho0, cfg.omega * cfg.omega);
    let robin = I * (cfg.k0 / rho0);
    let inv_eps = 1.0 / cfg.eps0;
    let HomogenizedCoeffs { a11, b1, kinv, f } = *coeffs;

    // Ω⁺: ∫(1/ρ₀)∇P∇P̃ − (ω²/K₀)∫PP̃ − ∫_Γ⁰ G⁺P̃ + (ik₀/ρ₀)∫_in PP̃ = (2ik₀/ρ₀)P_in∫_in P̃
    sys.add("P+", "P+", &b.stiff_plus, c(1.0 / rho0))?;
    sys.add("P+", "P+", &b.mass_plus, c(-w2 / cfg.k_bulk0))?;
    sys.add("P+", "P+", &b.inlet, robin)?;
    sys.add("P+", "G+", &b.g_tp_m, c(-1.0))?;
    sys.add_rhs("P+", &b.inlet_load, robin * (2.0 * cfg.p_in));

    // Ω⁻: same operator, + ∫_Γ⁰ G⁻P̃, absorbing outlets
    sys.add("P-", "P-", &b.stiff_minus, c(1.0 / rho0))?;
    sys.add("P-", "P-", &b.mass_minus, c(-w2 / cfg.k_bulk0))?;
    sys.add("P-", "P-", &b.outlet, robin)?;
    sys.add("P-", "G-", &b.g_tm_m, c(1.0))?;

    // A₁₁∫p⁰'q' − ω²K⁻¹∫p⁰q + ½B₁∫(G⁺+G⁻)q' + (1/ε₀)∫(G⁺−G⁻)q = 0
    sys.add("p0", "p0", &b.p0_p0_dd, c(a11))?;
    sys.add("p0", "p0", &b.p0_p0_m, c(-w2 * kinv))?;
    sys.add("p0", "G+", &b.g_p0_testdx, c(0.5 * b1))?;
    sys.add("p0", "G-", &b.g_p0_testdx, c(0.5 * b1))?;
    sys.add("p0", "G+", &b.g_p0_m, c(inv_eps))?;
    sys.add("p0", "G-", &b.g_p0_m, c(-inv_eps))?;

    // B₁∫p⁰'ψ − ½F∫(G⁺+G⁻)ψ − (1/ε₀)∫(P⁺−P⁻)ψ = 0
    sys.add("G+", "p0", &b.p0_g_trialdx, c(b1))?;
    sys.add("G+", "G+", &b.g_g_m, c(-0.5 * f))?;
    sys.add("G+", "G-", &b.g_g_m, c(-0.5 * f))?;
    sys.add("G+", "P+", &b.tp_g_m, c(-inv_eps))?;
    sys.add("G+", "P-", &b.tm_g_m, c(inv_eps))?;

    // ∫p⁰φ − ½∫(P⁺+P⁻)φ = 0
    sys.add("G-", "p0", &b.p0_g_m, c(1.0))?;
    sys.add("G-", "P+", &b.tp_g_m, c(-0.5))?;
    sys.add("G-", "P-", &b.tm_g_m, c(-0.5))?;

    Ok(MacroSystem { system: sys, spaces, blocks: problem.blocks.clone(), coeffs: *coeffs, cfg: *cfg })
}

#[derive(Clone, Debug)]
pub struct MacroSolution {
    pub p_plus: Vec<Complex64>,
    pub p_minus: Vec<Complex64>,
    pub p0: Vec<Complex64>,
    pub g_plus: Vec<Complex64>,
    pub g_minus: Vec<Complex64>,
    /// Relative residual of the linear solve.
    pub residual: f64,
    pub spaces: Arc<MacroSpaces>,
    pub(crate) blocks: Arc<MacroBlocks>,
    pub cfg: MacroConfig,
    pub coeffs: HomogenizedCoeffs,
}

impl MacroSolution {
    /// Unknowns in block order.
    pub fn stacked(&self) -> Vec<Complex64> {
        [&self.p_plus, &self.p_minus, &self.p0, &self.g_plus, &self.g_minus].into_iter().flatten().copied().collect()
    }

    pub(crate) fn from_vector(x: &[Complex64], sys: &MacroSystem, residual: f64) -> Self {
        let l = &sys.system.layout;
        let get = |n: &str| x[l.range(n)].to_vec();
        MacroSolution {
            p_plus: get("P+"),
            p_minus: get("P-"),
            p0: get("p0"),
            g_plus: get("G+"),
            g_minus: get("G-"),
            residual,
            spaces: sys.spaces.clone(),
            blocks: sys.blocks.clone(),
            cfg: sys.cfg,
            coeffs: sys.coeffs,
        }
    }
}

pub fn solve_macro(sys: &MacroSystem) -> Result<MacroSolution> {
    let x = sys.system.solve()?;
    let residual = sys.system.relative_residual(&x);
    if !(residual < 1e-8) {
        return Err(Error::Solver(format!("macro solve residual {residual:.3e} too large")));
    }
    Ok(MacroSolution::from_vector(&x, sys, residual))
}

/// Assemble and solve in one call.
pub fn macro_solve(mesh: &MacroMesh, coeffs: &HomogenizedCoeffs, cfg: &MacroConfig) -> Result<MacroSolution> {
    solve_macro(&assemble_macro_system(mesh, coeffs, cfg)?)
}

fn side_of(tag: BoundaryTag) -> Option<bool> {
    match tag {
        BoundaryTag::Inlet => Some(true),
        BoundaryTag::Outlet1 | BoundaryTag::Outlet2 => Some(false),
        _ => None,
    }
}

/// ∫_tag |P|² on the half-domain owning the tag.
pub fn boundary_norm(sol: &MacroSolution, tag: BoundaryTag) -> Result<f64> {
    let (space, u) = match side_of(tag) {
        Some(true) => (&sol.spaces.plus, &sol.p_plus),
        Some(false) => (&sol.spaces.minus, &sol.p_minus),
        None => return Err(Error::invalid(format!("`{}` is not an inlet/outlet", tag.name()))),
    };
    let m = assemble_matrix(space, &[Term::BoundaryMass(tag, 1.0)])?;
    Ok(m.hermitian_form(u))
}

/// Boundary mass matrix of an outlet on Ω⁻.
pub fn outlet_mass(sol: &MacroSolution, tag: BoundaryTag) -> Result<Coo> {
    if side_of(tag) != Some(false) {
        return Err(Error::invalid(format!("`{}` is not an outlet", tag.name())));
    }
    assemble_matrix(&sol.spaces.minus, &[Term::BoundaryMass(tag, 1.0)])
}

/// Time-averaged power leaving the domain through `tag` (W per metre of
/// depth), from ½Re(p·conj(u_n)) with u_n taken from the boundary
/// condition on that boundary. Walls carry none.
pub fn boundary_energy_flux(sol: &MacroSolution, tag: BoundaryTag) -> Result<f64> {
    let cfg = &sol.cfg;
    let scale = cfg.k0 / (2.0 * cfg.omega * cfg.rho0);
    match tag {
        BoundaryTag::Wall => Ok(0.0),
        BoundaryTag::Outlet1 | BoundaryTag::Outlet2 => {
            if !sol.spaces.minus.mesh.has_tag(tag) {
                return Err(Error::MissingTag(tag));
            }
            Ok(scale * boundary_norm(sol, tag)?)
        }
        BoundaryTag::Inlet => {
            // ∂ₙp = −ik₀p + 2ik₀P_in  ⇒  u_n = (k₀/ωρ₀)(p − 2P_in)
            let norm = boundary_norm(sol, tag)?;
            let load = assemble_vector(&sol.spaces.plus, &[Source::Boundary(tag, 1.0)])?;
            let mean: Complex64 = load.iter().zip(&sol.p_plus).map(|(w, p)| p * *w).sum();
            Ok(scale * (norm - 2.0 * cfg.p_in * mean.re))
        }
        BoundaryTag::Interface => {
            // leaving Ω⁺ upward into the layer: u₂ = −G⁺/(iω)
            let s = &sol.spaces;
            let line = &s.mesh.gamma0;
            let m = assemble_line(line, &s.g, &s.trace_plus, LineOp::Mass, 1.0);
            let mg = m.matvec(&sol.g_plus);
            let pairing: Complex64 = sol.p_plus.iter().zip(&mg).map(|(p, g)| p * g.conj()).sum();
            let un_conj = I / cfg.omega;
            Ok(0.5 * (pairing * un_conj.conj()).re)
        }
        other => Err(Error::invalid(format!("`{}` is not an exterior macro boundary", other.name()))),
    }
}

/// |inflow − outflow| / incident power.
pub fn power_imbalance(sol: &MacroSolution) -> Result<f64> {
    let inflow = -boundary_energy_flux(sol, BoundaryTag::Inlet)?;
    let mut out = 0.0;
    for t in sol.cfg.geometry.outlet_tags() {
        out += boundary_energy_flux(sol, t)?;
    }
    Ok((inflow - out).abs() / sol.cfg.incident_power())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn air() -> HomogenizedCoeffs {
        HomogenizedCoeffs::homogeneous(1.2, 1.42e5)
    }

    #[test]
    fn layout_partitions() {
        let cfg = MacroConfig::from_k0(25.0, MacroGeometry::validation());
        let mesh = build_macro_mesh(&cfg, 10, 10).unwrap();
        let sys = assemble_macro_system(&mesh, &air(), &cfg).unwrap();
        assert!(sys.system.layout.is_partition());
        assert!(sys.system.empty_rows().is_empty());
    }

    #[test]
    fn zero_eps_rejected() {
        let mut cfg = MacroConfig::from_k0(25.0, MacroGeometry::validation());
        cfg.eps0 = 0.0;
        assert!(build_macro_mesh(&cfg, 10, 10).is_err());
    }

    #[test]
    fn air_power_balance() {
        let cfg = MacroConfig::from_k0(25.0, MacroGeometry::design());
        let mesh = build_macro_mesh(&cfg, 20, 20).unwrap();
        let sol = macro_solve(&mesh, &air(), &cfg).unwrap();
        let inflow = -boundary_energy_flux(&sol, BoundaryTag::Inlet).unwrap();
        let out = boundary_energy_flux(&sol, BoundaryTag::Outlet1).unwrap() + boundary_energy_flux(&sol, BoundaryTag::Outlet2).unwrap();
        assert!((inflow - out).abs() < 1e-9 * cfg.incident_power(), "{inflow} {out}");
    }
}
