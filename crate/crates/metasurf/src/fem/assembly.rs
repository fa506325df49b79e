//! Weak-form terms and their assembly into coordinate (COO) matrices.

use super::element::{geometry, line_basis};
use super::quadrature::{gauss_legendre, tri_rule};
use super::space::{FunctionSpace, LineMesh, Order, SegmentDofs};
use crate::error::Result;
use crate::mesh::{BoundaryTag, Point, Region};

/// Piecewise-constant coefficient keyed by region label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionCoef {
    pub air: f64,
    pub elastic: f64,
    pub non_design: f64,
}

impl RegionCoef {
    pub fn uniform(c: f64) -> Self {
        RegionCoef { air: c, elastic: c, non_design: c }
    }

    pub fn of(&self, r: Region) -> f64 {
        match r {
            Region::Air => self.air,
            Region::Elastic => self.elastic,
            Region::NonDesign => self.non_design,
        }
    }
}

/// Bilinear terms: ∫c u v, ∫c ∇u·∇v, ∫_tag c u v.
#[derive(Clone, Copy, Debug)]
pub enum Term {
    Mass(RegionCoef),
    Stiffness(RegionCoef),
    BoundaryMass(BoundaryTag, f64),
}

/// Linear terms: ∫f v, ∫c ∂v/∂x_dir, ∫_tag c v.
pub enum Source<'a> {
    Volume(&'a (dyn Fn(Point) -> f64 + Sync)),
    Gradient { dir: usize, coef: RegionCoef },
    Boundary(BoundaryTag, f64),
}

/// Real sparse matrix in coordinate form; duplicates are summed on use.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Coo {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Coo {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Coo { nrows, ncols, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        self.entries.push((i, j, v));
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for &(i, j, v) in &self.entries {
            d[i][j] += v;
        }
        d
    }

    pub fn transpose(&self) -> Coo {
        Coo { nrows: self.ncols, ncols: self.nrows, entries: self.entries.iter().map(|&(i, j, v)| (j, i, v)).collect() }
    }

    pub fn matvec<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let mut y = vec![T::default(); self.nrows];
        for &(i, j, v) in &self.entries {
            y[i] = y[i] + x[j] * v;
        }
        y
    }

    /// Σ conj(u_i) M_ij u_j for a real symmetric M.
    pub fn hermitian_form(&self, u: &[num_complex::Complex64]) -> f64 {
        self.entries.iter().map(|&(i, j, v)| (u[i].conj() * u[j]).re * v).sum()
    }

    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, j, v)| u[i] * u[j] * v).sum()
    }
}

/// Assemble the sum of `terms` on `space` (trial = test).
pub fn assemble_matrix(space: &FunctionSpace, terms: &[Term]) -> Result<Coo> {
    let mesh = &space.mesh;
    for t in terms {
        if let Term::BoundaryMass(tag, _) = t {
            mesh.require_tag(*tag)?;
        }
    }
    let n = space.n_dofs();
    let nl = space.order.n_local();
    let mut coo = Coo::new(n, n);
    let volume: Vec<&Term> = terms.iter().filter(|t| !matches!(t, Term::BoundaryMass(..))).collect();
    if !volume.is_empty() {
        let rule = tri_rule(if space.order == Order::P2 { 4 } else { 2 });
        coo.entries.reserve(mesh.n_triangles() * nl * nl);
        for t in 0..mesh.n_triangles() {
            let g = geometry(mesh.vertices(t));
            let region = mesh.regions[t];
            let mut k = [[0.0; 6]; 6];
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let (v, d) = space.basis(t, *l);
                let wa = w * g.area;
                for term in &volume {
                    match term {
                        Term::Mass(c) => {
                            let c = c.of(region) * wa;
                            for i in 0..nl {
                                for j in 0..nl {
                                    k[i][j] += c * v[i] * v[j];
                                }
                            }
                        }
                        Term::Stiffness(c) => {
                            let c = c.of(region) * wa;
                            for i in 0..nl {
                                for j in 0..nl {
                                    k[i][j] += c * (d[i][0] * d[j][0] + d[i][1] * d[j][1]);
                                }
                            }
                        }
                        Term::BoundaryMass(..) => unreachable!(),
                    }
                }
            }
            let dofs = space.local_dofs(t);
            for i in 0..nl {
                for j in 0..nl {
                    coo.push(dofs[i], dofs[j], k[i][j]);
                }
            }
        }
    }
    for term in terms {
        if let Term::BoundaryMass(tag, c) = term {
            boundary_mass(space, *tag, *c, &mut coo);
        }
    }
    Ok(coo)
}

fn boundary_mass(space: &FunctionSpace, tag: BoundaryTag, c: f64, coo: &mut Coo) {
    let p2 = space.order == Order::P2;
    let nl = if p2 { 3 } else { 2 };
    let rule = gauss_legendre(3);
    for e in space.mesh.edges_with_tag(tag) {
        let (a, b) = (space.mesh.nodes[e.nodes[0]], space.mesh.nodes[e.nodes[1]]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let dofs = space.boundary_edge_dofs(e);
        let mut k = [[0.0; 3]; 3];
        for &(t, w) in &rule {
            let (v, _) = line_basis(p2, t);
            for i in 0..nl {
                for j in 0..nl {
                    k[i][j] += c * w * len * v[i] * v[j];
                }
            }
        }
        for i in 0..nl {
            for j in 0..nl {
                coo.push(dofs[i], dofs[j], k[i][j]);
            }
        }
    }
}

/// Assemble the load vector of `sources` on `space`.
pub fn assemble_vector(space: &FunctionSpace, sources: &[Source]) -> Result<Vec<f64>> {
    let mesh = &space.mesh;
    for s in sources {
        if let Source::Boundary(tag, _) = s {
            mesh.require_tag(*tag)?;
        }
    }
    let nl = space.order.n_local();
    let mut f = vec![0.0; space.n_dofs()];
    let rule = tri_rule(5);
    for s in sources {
        match s {
            Source::Volume(func) => {
                for t in 0..mesh.n_triangles() {
                    let g = geometry(mesh.vertices(t));
                    let vx = mesh.vertices(t);
                    let dofs = space.local_dofs(t);
                    for (l, w) in rule.points.iter().zip(&rule.weights) {
                        let p = [0, 1].map(|k| l[0] * vx[0][k] + l[1] * vx[1][k] + l[2] * vx[2][k]);
                        let (v, _) = space.basis(t, *l);
                        let fw = func(p) * w * g.area;
                        for i in 0..nl {
                            f[dofs[i]] += fw * v[i];
                        }
                    }
                }
            }
            Source::Gradient { dir, coef } => {
                let rule = tri_rule(1);
                for t in 0..mesh.n_triangles() {
                    let g = geometry(mesh.vertices(t));
                    let c = coef.of(mesh.regions[t]);
                    let dofs = space.local_dofs(t);
                    // gradients of P2 are linear: the centroid rule is exact
                    for (l, w) in rule.points.iter().zip(&rule.weights) {
                        let (_, d) = space.basis(t, *l);
                        for i in 0..nl {
                            f[dofs[i]] += c * w * g.area * d[i][*dir];
                        }
                    }
                }
            }
            Source::Boundary(tag, c) => {
                let p2 = space.order == Order::P2;
                for e in mesh.edges_with_tag(*tag) {
                    let (a, b) = (mesh.nodes[e.nodes[0]], mesh.nodes[e.nodes[1]]);
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    let dofs = space.boundary_edge_dofs(e);
                    // ∫ of the segment basis: 1/6, 1/6, 2/3 (P2) or 1/2, 1/2 (P1)
                    let ints: &[f64] = if p2 { &[1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0] } else { &[0.5, 0.5] };
                    for (i, w) in ints.iter().enumerate() {
                        f[dofs[i]] += c * len * w;
                    }
                }
            }
        }
    }
    Ok(f)
}

/// 1-D operators between segment spaces: ∫u v, ∫u' v, ∫u v', ∫u' v'.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineOp {
    Mass,
    TrialDx,
    TestDx,
    DxDx,
}

/// Assemble `coef * op(trial, test)` over the segments of `line`; rows are
/// test DOFs, columns trial DOFs. Either side may be a trace of a 2-D space.
pub fn assemble_line(line: &LineMesh, trial: &SegmentDofs, test: &SegmentDofs, op: LineOp, coef: f64) -> Coo {
    let rule = gauss_legendre(3);
    let (nu, nv) = (trial.n_local(), test.n_local());
    let mut coo = Coo::new(test.n_dofs, trial.n_dofs);
    for s in 0..line.n_segments() {
        let h = line.xs[s + 1] - line.xs[s];
        let mut k = [[0.0; 3]; 3];
        for &(t, w) in &rule {
            let (u, du) = line_basis(trial.order == Order::P2, t);
            let (v, dv) = line_basis(test.order == Order::P2, t);
            for i in 0..nv {
                for j in 0..nu {
                    let val = match op {
                        LineOp::Mass => u[j] * v[i] * h,
                        LineOp::TrialDx => du[j] * v[i],
                        LineOp::TestDx => u[j] * dv[i],
                        LineOp::DxDx => du[j] * dv[i] / h,
                    };
                    k[i][j] += coef * w * val;
                }
            }
        }
        for i in 0..nv {
            for j in 0..nu {
                coo.push(test.dofs[s][i], trial.dofs[s][j], k[i][j]);
            }
        }
    }
    coo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_mesh, BoundaryEdge, Scale, SideTags, TriMesh};
    use std::sync::Arc;

    fn one_triangle(v: [Point; 3]) -> Arc<TriMesh> {
        let boundary = (0..3).map(|k| BoundaryEdge { nodes: [k, (k + 1) % 3], tag: BoundaryTag::Wall }).collect();
        Arc::new(TriMesh::new(v.to_vec(), vec![[0, 1, 2]], vec![Region::Air], boundary, Scale::Macro).unwrap())
    }

    #[test]
    fn p1_element_matrices() {
        let m = one_triangle([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let s = FunctionSpace::new(m, Order::P1);
        let mass = assemble_matrix(&s, &[Term::Mass(RegionCoef::uniform(1.0))]).unwrap().to_dense();
        let stiff = assemble_matrix(&s, &[Term::Stiffness(RegionCoef::uniform(1.0))]).unwrap().to_dense();
        let a = 0.5;
        let em = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]];
        let ek = [[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((mass[i][j] - a / 12.0 * em[i][j]).abs() < 1e-15);
                assert!((stiff[i][j] - 0.5 * ek[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn p2_mass_integrates_to_area() {
        let m = Arc::new(generate_rect_mesh(2.0, 0.5, 3, 2, &SideTags::all(BoundaryTag::Wall)).unwrap());
        let s = FunctionSpace::new(m, Order::P2);
        let mass = assemble_matrix(&s, &[Term::Mass(RegionCoef::uniform(1.0))]).unwrap();
        let total: f64 = mass.entries.iter().map(|e| e.2).sum();
        assert!((total - 1.0).abs() < 1e-13);
        let b = assemble_matrix(&s, &[Term::BoundaryMass(BoundaryTag::Wall, 1.0)]).unwrap();
        let per: f64 = b.entries.iter().map(|e| e.2).sum();
        assert!((per - 5.0).abs() < 1e-13);
    }

    #[test]
    fn missing_tag_is_named() {
        let m = one_triangle([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let s = FunctionSpace::new(m, Order::P1);
        let err = assemble_matrix(&s, &[Term::BoundaryMass(BoundaryTag::Inlet, 1.0)]).unwrap_err();
        assert!(err.to_string().contains("inlet"));
    }

    #[test]
    fn line_operators() {
        use crate::fem::{LineSpace, LineMesh};
        let line = LineMesh::new(vec![0.0, 0.2, 0.5, 1.0]).unwrap();
        let p2 = LineSpace::new(&line, Order::P2).segments();
        let p1 = LineSpace::new(&line, Order::P1).segments();
        // ∫ x * 1' = 0 and ∫ x' * 1 = 1 on [0,1]
        let x2: Vec<f64> = LineSpace::new(&line, Order::P2).dof_points(&line);
        let ones1 = vec![1.0; p1.n_dofs];
        let m = assemble_line(&line, &p2, &p1, LineOp::TrialDx, 1.0);
        let r: f64 = m.matvec(&x2).iter().zip(&ones1).map(|(a, b)| a * b).sum();
        assert!((r - 1.0).abs() < 1e-14);
        let m = assemble_line(&line, &p2, &p2, LineOp::DxDx, 1.0);
        let sq: Vec<f64> = x2.iter().map(|x| x * x).collect();
        let r: f64 = m.matvec(&sq).iter().zip(&sq).map(|(a, b)| a * b).sum();
        assert!((r - 4.0 / 3.0).abs() < 1e-13);
    }
}
