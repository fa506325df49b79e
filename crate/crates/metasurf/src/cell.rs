//! Periodic cell problems on Y = [0, 1]² and the interface coefficients.
//!
//! Two P2 problems share one operator ∫(1/ρ)∇u·∇ψ with periodic sides and a
//! zero-mean gauge:
//! η with load −∫(1/ρ)∂ψ/∂y₁, and ξ with load −(∫_{I+}ψ − ∫_{I−}ψ),
//! where I+ is the bottom face (y₂ = 0) and I− the top face.

use crate::error::{Error, Result};
use crate::fem::{assemble_matrix, assemble_vector, BlockLayout, Coo, FunctionSpace, Order, RegionCoef, Source, SparseSystem, Term};
use crate::mesh::{pair_periodic_nodes, BoundaryTag, PeriodicMap, Region, TriMesh};
use std::sync::Arc;

/// The rows 0 ≤ y₂ < 0.1 and 0.9 < y₂ ≤ 1 are a fixed air margin.
pub const DESIGN_BAND: (f64, f64) = (0.1, 0.9);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialPair {
    pub rho_air: f64,
    pub k_air: f64,
    pub rho_elastic: f64,
    pub k_elastic: f64,
}

impl MaterialPair {
    /// Air and aluminum.
    pub fn air_aluminum() -> Self {
        MaterialPair { rho_air: 1.2, k_air: 1.42e5, rho_elastic: 2643.0, k_elastic: 6.87e10 }
    }

    pub fn new(rho_air: f64, k_air: f64, rho_elastic: f64, k_elastic: f64) -> Result<Self> {
        let m = MaterialPair { rho_air, k_air, rho_elastic, k_elastic };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.rho_air, self.k_air, self.rho_elastic, self.k_elastic];
        if v.iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(())
        } else {
            Err(Error::invalid(format!("material constants must be positive, got {v:?}")))
        }
    }

    pub fn rho(&self, r: Region) -> f64 {
        match r {
            Region::Elastic => self.rho_elastic,
            _ => self.rho_air,
        }
    }

    pub fn bulk(&self, r: Region) -> f64 {
        match r {
            Region::Elastic => self.k_elastic,
            _ => self.k_air,
        }
    }

    pub fn inv_rho(&self) -> RegionCoef {
        RegionCoef { air: 1.0 / self.rho_air, elastic: 1.0 / self.rho_elastic, non_design: 1.0 / self.rho_air }
    }

    pub fn inv_bulk(&self) -> RegionCoef {
        RegionCoef { air: 1.0 / self.k_air, elastic: 1.0 / self.k_elastic, non_design: 1.0 / self.k_air }
    }
}

/// The four interface coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomogenizedCoeffs {
    pub a11: f64,
    pub b1: f64,
    pub kinv: f64,
    pub f: f64,
}

impl HomogenizedCoeffs {
    /// Coefficients of a cell filled with a single fluid.
    pub fn homogeneous(rho: f64, k: f64) -> Self {
        HomogenizedCoeffs { a11: 1.0 / rho, b1: 0.0, kinv: 1.0 / k, f: rho }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a11, self.b1, self.kinv, self.f]
    }
}

/// η and ξ as P2 DOF vectors on a periodic space.
#[derive(Clone, Debug)]
pub struct CellSolution {
    pub space: FunctionSpace,
    pub eta: Vec<f64>,
    pub xi: Vec<f64>,
}

impl CellSolution {
    pub fn mesh(&self) -> &TriMesh {
        &self.space.mesh
    }

    /// Adds constants to both fields (gauge shift).
    pub fn shifted(&self, c_eta: f64, c_xi: f64) -> CellSolution {
        let mut s = self.clone();
        s.eta.iter_mut().for_each(|v| *v += c_eta);
        s.xi.iter_mut().for_each(|v| *v += c_xi);
        s
    }
}

/// Check that a mesh is a labeled unit cell; returns its periodic pairing.
pub fn validate_cell_mesh(mesh: &TriMesh) -> Result<PeriodicMap> {
    let (lo, hi) = mesh.bounding_box();
    let tol = 1e-12;
    if lo[0].abs() > tol || lo[1].abs() > tol || (hi[0] - 1.0).abs() > tol || (hi[1] - 1.0).abs() > tol {
        return Err(Error::Mesh(format!("cell mesh must span [0,1]², spans {lo:?}..{hi:?}")));
    }
    for tag in [BoundaryTag::CellBottom, BoundaryTag::CellTop] {
        mesh.require_tag(tag)?;
    }
    for t in 0..mesh.n_triangles() {
        let y = mesh.centroid(t)[1];
        let inside = y > DESIGN_BAND.0 && y < DESIGN_BAND.1;
        let nd = mesh.regions[t] == Region::NonDesign;
        if inside == nd {
            return Err(Error::Mesh(format!(
                "triangle {t} at y₂ = {y:.4} is labeled {:?}, inconsistent with the design band",
                mesh.regions[t]
            )));
        }
    }
    pair_periodic_nodes(mesh, BoundaryTag::PeriodicLeft, BoundaryTag::PeriodicRight)
}

/// Solve both cell problems with one factorization.
pub fn solve_cell_problems(mesh: Arc<TriMesh>, mat: &MaterialPair) -> Result<CellSolution> {
    mat.validate()?;
    let pairing = validate_cell_mesh(&mesh)?;
    let space = FunctionSpace::periodic(mesh, Order::P2, pairing)?;
    let n = space.n_dofs();
    let stiffness = assemble_matrix(&space, &[Term::Stiffness(mat.inv_rho())])?;
    let one = |_: [f64; 2]| 1.0;
    let mean = assemble_vector(&space, &[Source::Volume(&one)])?;
    // gauge: pin the first vertex DOF, then shift both fields to zero mean
    let pin = space.node_dof(0);
    let mut pinned = Coo::new(n, n);
    pinned.entries = stiffness.entries.iter().copied().filter(|&(i, j, _)| i != pin && j != pin).collect();
    pinned.push(pin, pin, 1.0);
    let mut layout = BlockLayout::new();
    layout.push("u", n);
    let mut sys = SparseSystem::<f64>::new(layout);
    sys.add("u", "u", &pinned, 1.0)?;
    let inv_rho = mat.inv_rho();
    let neg = RegionCoef { air: -inv_rho.air, elastic: -inv_rho.elastic, non_design: -inv_rho.non_design };
    let f_eta = assemble_vector(&space, &[Source::Gradient { dir: 0, coef: neg }])?;
    let f_xi = assemble_vector(&space, &[Source::Boundary(BoundaryTag::CellBottom, -1.0), Source::Boundary(BoundaryTag::CellTop, 1.0)])?;
    let lu = sys.factorize()?;
    let pad = |mut v: Vec<f64>| {
        v[pin] = 0.0;
        v
    };
    let mut sols = lu.solve_many(&[pad(f_eta), pad(f_xi)])?;
    let area: f64 = mean.iter().sum();
    for u in sols.iter_mut() {
        let m = u.iter().zip(&mean).map(|(a, b)| a * b).sum::<f64>() / area;
        u.iter_mut().for_each(|v| *v -= m);
    }
    let xi = sols.pop().unwrap();
    let eta = sols.pop().unwrap();
    Ok(CellSolution { space, eta, xi })
}

/// ∫(1/ρ)(∂η/∂y₁ + 1), ∫(1/ρ)∂ξ/∂y₁, ∫1/K, and −(∫_{I+}ξ − ∫_{I−}ξ).
pub fn homogenized_coefficients(sol: &CellSolution, mat: &MaterialPair) -> HomogenizedCoeffs {
    let mesh = sol.mesh();
    let centroid = [1.0 / 3.0; 3];
    let (mut a11, mut b1, mut kinv) = (0.0, 0.0, 0.0);
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        let r = mesh.regions[t];
        // P2 gradients are linear, so the centroid value times the area is exact
        let ge = sol.space.grad(&sol.eta, t, centroid);
        let gx = sol.space.grad(&sol.xi, t, centroid);
        a11 += area * (ge[0] + 1.0) / mat.rho(r);
        b1 += area * gx[0] / mat.rho(r);
        kinv += area / mat.bulk(r);
    }
    let f = -(face_integral(sol, &sol.xi, BoundaryTag::CellBottom) - face_integral(sol, &sol.xi, BoundaryTag::CellTop));
    HomogenizedCoeffs { a11, b1, kinv, f }
}

/// Second evaluation path for B1: ∫_{I+}η − ∫_{I−}η.
pub fn b1_trace_identity(sol: &CellSolution) -> f64 {
    face_integral(sol, &sol.eta, BoundaryTag::CellBottom) - face_integral(sol, &sol.eta, BoundaryTag::CellTop)
}

fn face_integral(sol: &CellSolution, u: &[f64], tag: BoundaryTag) -> f64 {
    let mesh = sol.mesh();
    mesh.edges_with_tag(tag)
        .map(|e| {
            let (a, b) = (mesh.nodes[e.nodes[0]], mesh.nodes[e.nodes[1]]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let d = sol.space.boundary_edge_dofs(e);
            len * (u[d[0]] / 6.0 + u[d[1]] / 6.0 + 2.0 * u[d[2]] / 3.0)
        })
        .sum()
}

/// Mean of a P2 field over Y.
pub fn mean_value(sol: &CellSolution, u: &[f64]) -> f64 {
    let mesh = sol.mesh();
    // P2 vertex functions integrate to zero, edge functions to area/3
    let mut s = 0.0;
    for t in 0..mesh.n_triangles() {
        let d = sol.space.local_dofs(t);
        s += mesh.area(t) / 3.0 * (u[d[3]] + u[d[4]] + u[d[5]]);
    }
    s
}

/// Cell solve followed by coefficient evaluation.
pub fn compute_coefficients(mesh: Arc<TriMesh>, mat: &MaterialPair) -> Result<(CellSolution, HomogenizedCoeffs)> {
    let sol = solve_cell_problems(mesh, mat)?;
    let c = homogenized_coefficients(&sol, mat);
    Ok((sol, c))
}
