//! Clamped nodal level set on the design domain D and its
//! reaction-diffusion update.
//!
//! φ lives on the P1 nodes of the fixed base design mesh. Elastic material
//! occupies φ ≥ 0. One update is an implicit Euler step of
//! ∂φ/∂t = −K_φ (J′ − τ Δφ), periodic across the cell sides and natural
//! (Neumann) on the top and bottom of D, followed by clamping to [−1, 1].

use crate::cell::DESIGN_BAND;
use crate::error::{Error, Result};
use crate::fem::{assemble_matrix, BlockLayout, Coo, Factorization, FunctionSpace, Order, RegionCoef, SparseSystem, Term};
use crate::mesh::{
    cell_base_mesh, conform_to_levelset, pair_periodic_nodes, read_vtk, write_vtk, BoundaryTag, ConformOptions, Material,
    PeriodicMap, Point, Region, Scale, TriMesh, VtkField,
};
use std::path::Path;
use std::sync::Arc;

/// Initial shapes, in cell coordinates. Distances wrap periodically in y₁.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Circle { center: Point, radius: f64 },
    /// Horizontal `width`, vertical `height`; the top edge is offset by
    /// `shear` relative to the bottom edge.
    Parallelogram { center: Point, width: f64, height: f64, shear: f64 },
}

fn wrap(dx: f64) -> f64 {
    dx - dx.round()
}

impl Shape {
    /// Positive inside, negative outside; approximately the distance to the
    /// boundary near it.
    pub fn signed(&self, p: Point) -> f64 {
        match *self {
            Shape::Circle { center, radius } => radius - wrap(p[0] - center[0]).hypot(p[1] - center[1]),
            Shape::Parallelogram { center, width, height, shear } => {
                let dy = p[1] - center[1];
                let dx = wrap(p[0] - center[0] - shear * dy / height);
                let cos = 1.0 / (1.0 + (shear / height).powi(2)).sqrt();
                (height / 2.0 - dy.abs()).min((width / 2.0 - dx.abs()) * cos)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Shape::Circle { radius, .. } if !(radius > 0.0) => Err(Error::invalid(format!("circle radius must be positive, got {radius}"))),
            Shape::Parallelogram { width, height, .. } if !(width > 0.0 && height > 0.0) => {
                Err(Error::invalid("parallelogram needs positive width and height"))
            }
            _ => Ok(()),
        }
    }

    /// Slanted inclusion fitted to the validation cell.
    pub fn validation_parallelogram() -> Self {
        Shape::Parallelogram { center: [0.5, 0.5], width: 0.25, height: 0.48, shear: 0.5 }
    }

    /// Whether the shape stays inside the design band (y₂ extent).
    pub fn fits_design_band(&self) -> bool {
        let (lo, hi) = match *self {
            Shape::Circle { center, radius } => (center[1] - radius, center[1] + radius),
            Shape::Parallelogram { center, height, .. } => (center[1] - height / 2.0, center[1] + height / 2.0),
        };
        lo >= DESIGN_BAND.0 - 1e-12 && hi <= DESIGN_BAND.1 + 1e-12
    }
}

/// Base analysis mesh of the cell plus the design sub-mesh D it contains.
#[derive(Clone, Debug)]
pub struct DesignDomain {
    pub cell_mesh: Arc<TriMesh>,
    pub cell_periodic: PeriodicMap,
    pub design_mesh: Arc<TriMesh>,
    /// Design node -> cell node.
    pub to_cell: Vec<usize>,
    pub periodic: PeriodicMap,
}

impl DesignDomain {
    pub fn new(cell_mesh: TriMesh) -> Result<Self> {
        let cell_periodic = pair_periodic_nodes(&cell_mesh, BoundaryTag::PeriodicLeft, BoundaryTag::PeriodicRight)?;
        let (design, to_cell) = cell_mesh.submesh(|t| cell_mesh.regions[t] != Region::NonDesign, |_| BoundaryTag::Wall)?;
        let periodic = pair_periodic_nodes(&design, BoundaryTag::PeriodicLeft, BoundaryTag::PeriodicRight)?;
        Ok(DesignDomain { cell_mesh: Arc::new(cell_mesh), cell_periodic, design_mesh: Arc::new(design), to_cell, periodic })
    }

    /// Structured n x n cell (n a multiple of 10).
    pub fn structured(n: usize) -> Result<Self> {
        Self::new(cell_base_mesh(n, DESIGN_BAND)?)
    }

    pub fn n_design_nodes(&self) -> usize {
        self.design_mesh.n_nodes()
    }

    /// φ on every node of the cell mesh (−1 on nodes outside D).
    pub fn cell_phi(&self, ls: &LevelSet) -> Vec<f64> {
        let mut phi = vec![-1.0; self.cell_mesh.n_nodes()];
        for (d, &c) in self.to_cell.iter().enumerate() {
            phi[c] = ls.phi[d];
        }
        phi
    }

    /// Interface-conforming, labeled analysis mesh for the level set.
    pub fn conforming_mesh(&self, ls: &LevelSet, opts: &ConformOptions) -> Result<TriMesh> {
        conform_to_levelset(&self.cell_mesh, &self.cell_phi(ls), Some(&self.cell_periodic), opts)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelSet {
    /// Nodal values on the design mesh.
    pub phi: Vec<f64>,
}

/// Conforming cell mesh of an n x n base grid with `shape` as the elastic
/// inclusion.
pub fn shape_cell_mesh(shape: &Shape, n: usize, opts: &ConformOptions) -> Result<TriMesh> {
    let domain = DesignDomain::structured(n)?;
    let ls = initialize(shape, &domain, 1.0)?;
    domain.conforming_mesh(&ls, opts)
}

/// Clamped profile φ = clamp(s(y) / width, −1, 1) of a shape's signed
/// function, made exactly periodic.
pub fn initialize(shape: &Shape, domain: &DesignDomain, width: f64) -> Result<LevelSet> {
    shape.validate()?;
    if !(width > 0.0) {
        return Err(Error::invalid("profile width must be positive"));
    }
    if !shape.fits_design_band() {
        return Err(Error::invalid("initial shape does not fit inside the design domain"));
    }
    let mut phi: Vec<f64> = domain.design_mesh.nodes.iter().map(|&p| (shape.signed(p) / width).clamp(-1.0, 1.0)).collect();
    for &(m, s) in &domain.periodic.pairs {
        phi[s] = phi[m];
    }
    Ok(LevelSet { phi })
}

impl LevelSet {
    pub fn uniform(domain: &DesignDomain, v: f64) -> Self {
        LevelSet { phi: vec![v.clamp(-1.0, 1.0); domain.n_design_nodes()] }
    }

    pub fn save(&self, path: &Path, domain: &DesignDomain) -> Result<()> {
        write_vtk(path, &domain.design_mesh, &[VtkField::Scalar("phi", &self.phi)], &[])
    }

    pub fn load(path: &Path, domain: &DesignDomain) -> Result<Self> {
        let (mesh, fields) = read_vtk(path, Scale::Micro)?;
        if mesh.nodes != domain.design_mesh.nodes {
            return Err(Error::invalid(format!("{} was saved on a different design mesh", path.display())));
        }
        let phi = fields
            .into_iter()
            .find(|(n, _)| n == "phi")
            .map(|(_, v)| v)
            .ok_or_else(|| Error::invalid(format!("{} has no `phi` field", path.display())))?;
        if phi.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::invalid("loaded level set leaves [-1, 1]"));
        }
        Ok(LevelSet { phi })
    }

    /// Elastic area fraction of D by nodal sign (diagnostic only).
    pub fn elastic_node_fraction(&self) -> f64 {
        self.phi.iter().filter(|&&v| v >= 0.0).count() as f64 / self.phi.len() as f64
    }
}

/// Nodal material: elastic where φ ≥ 0.
pub fn material_map(ls: &LevelSet) -> Vec<Material> {
    ls.phi.iter().map(|&v| if v >= 0.0 { Material::Elastic } else { Material::Air }).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSetParams {
    pub k_phi: f64,
    pub tau: f64,
    pub dt: f64,
}

impl Default for LevelSetParams {
    fn default() -> Self {
        LevelSetParams { k_phi: 1.0, tau: 1e-4, dt: 0.15 }
    }
}

impl LevelSetParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k_phi", self.k_phi), ("tau", self.tau), ("dt", self.dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("level-set parameter {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Factorized update operator, reused while the design mesh is fixed.
pub struct LevelSetStepper {
    space: FunctionSpace,
    mass: Coo,
    lu: Factorization<f64>,
    params: LevelSetParams,
    n_share: Vec<f64>,
}

impl LevelSetStepper {
    pub fn new(domain: &DesignDomain, params: LevelSetParams) -> Result<Self> {
        params.validate()?;
        let space = FunctionSpace::periodic(domain.design_mesh.clone(), Order::P1, domain.periodic.clone())?;
        let mass = assemble_matrix(&space, &[Term::Mass(RegionCoef::uniform(1.0))])?;
        let stiff = assemble_matrix(&space, &[Term::Stiffness(RegionCoef::uniform(1.0))])?;
        let mut layout = BlockLayout::new();
        layout.push("phi", space.n_dofs());
        let mut sys = SparseSystem::<f64>::new(layout);
        sys.add("phi", "phi", &mass, 1.0)?;
        sys.add("phi", "phi", &stiff, params.dt * params.k_phi * params.tau)?;
        let lu = sys.factorize()?;
        let mut n_share = vec![0.0; space.n_dofs()];
        for v in 0..domain.n_design_nodes() {
            n_share[space.node_dof(v)] += 1.0;
        }
        Ok(LevelSetStepper { space, mass, lu, params, n_share })
    }

    fn to_dofs(&self, nodal: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.space.n_dofs()];
        for (v, x) in nodal.iter().enumerate() {
            u[self.space.node_dof(v)] += x;
        }
        u.iter_mut().zip(&self.n_share).for_each(|(a, n)| *a /= n);
        u
    }

    /// One implicit step followed by clamping.
    pub fn step(&self, ls: &LevelSet, jprime: &[f64]) -> Result<LevelSet> {
        if jprime.len() != ls.phi.len() {
            return Err(Error::invalid("J′ and φ must live on the same nodes"));
        }
        let p = self.params;
        let phi = self.to_dofs(&ls.phi);
        let j = self.to_dofs(jprime);
        let rhs_src: Vec<f64> = phi.iter().zip(&j).map(|(f, g)| f - p.dt * p.k_phi * g).collect();
        let rhs = self.mass.matvec(&rhs_src);
        let next = self.lu.solve(&rhs)?;
        let phi = self.space.vertex_values(&next).into_iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        Ok(LevelSet { phi })
    }
}

/// Single update with a freshly built operator.
pub fn update(ls: &LevelSet, jprime: &[f64], params: LevelSetParams, domain: &DesignDomain) -> Result<LevelSet> {
    LevelSetStepper::new(domain, params)?.step(ls, jprime)
}
