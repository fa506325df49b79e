//! DOF maps for 2-D spaces on triangle meshes and 1-D spaces on segments.

use super::element::{geometry, line_basis, p2_grads, p2_values};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryEdge, BoundaryTag, PeriodicMap, Point, TriMesh};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    P1,
    P2,
}

impl Order {
    pub fn n_local(self) -> usize {
        match self {
            Order::P1 => 3,
            Order::P2 => 6,
        }
    }
}

/// Unique mesh edges; local edge k of a triangle joins vertices k and k+1.
#[derive(Clone, Debug)]
pub struct EdgeTable {
    pub edges: Vec<[usize; 2]>,
    pub tri_edges: Vec<[usize; 3]>,
    lookup: HashMap<(usize, usize), usize>,
}

impl EdgeTable {
    pub fn new(mesh: &TriMesh) -> Self {
        let mut lookup = HashMap::with_capacity(3 * mesh.n_triangles() / 2 + mesh.boundary.len());
        let mut edges = Vec::new();
        let mut tri_edges = Vec::with_capacity(mesh.n_triangles());
        for tri in &mesh.triangles {
            let mut te = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                te[k] = *lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
            }
            tri_edges.push(te);
        }
        EdgeTable { edges, tri_edges, lookup }
    }

    pub fn find(&self, a: usize, b: usize) -> Option<usize> {
        self.lookup.get(&(a.min(b), a.max(b))).copied()
    }
}

/// Continuous Lagrange space over every triangle of a mesh.
#[derive(Clone, Debug)]
pub struct FunctionSpace {
    pub mesh: Arc<TriMesh>,
    pub order: Order,
    pub edges: Arc<EdgeTable>,
    node_dof: Vec<usize>,
    edge_dof: Vec<usize>,
    n_dofs: usize,
    pub periodic: Option<PeriodicMap>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<TriMesh>, order: Order) -> Self {
        Self::build(mesh, order, None).expect("space without periodic merge cannot fail")
    }

    /// Space with the DOFs of paired periodic nodes (and the edges between
    /// them) merged into one global index.
    pub fn periodic(mesh: Arc<TriMesh>, order: Order, map: PeriodicMap) -> Result<Self> {
        Self::build(mesh, order, Some(map))
    }

    fn build(mesh: Arc<TriMesh>, order: Order, map: Option<PeriodicMap>) -> Result<Self> {
        let edges = Arc::new(EdgeTable::new(&mesh));
        let n = mesh.n_nodes();
        let master = map.as_ref().map(|m| m.master_of(n)).unwrap_or_else(|| (0..n).collect());
        let mut node_dof = vec![usize::MAX; n];
        let mut next = 0;
        for v in 0..n {
            if master[v] == v {
                node_dof[v] = next;
                next += 1;
            }
        }
        for v in 0..n {
            if master[v] != v {
                node_dof[v] = node_dof[master[v]];
            }
        }
        let mut edge_dof = Vec::new();
        if order == Order::P2 {
            edge_dof = vec![usize::MAX; edges.edges.len()];
            let mut slave_edges = Vec::new();
            for (e, &[a, b]) in edges.edges.iter().enumerate() {
                if master[a] != a && master[b] != b {
                    slave_edges.push(e);
                } else {
                    edge_dof[e] = next;
                    next += 1;
                }
            }
            for e in slave_edges {
                let [a, b] = edges.edges[e];
                let m = edges.find(master[a], master[b]).ok_or_else(|| {
                    Error::Pairing(format!("edge ({a}, {b}) has no periodic partner edge"))
                })?;
                if edge_dof[m] == usize::MAX {
                    return Err(Error::Pairing(format!("edge ({a}, {b}) maps onto another slave edge")));
                }
                edge_dof[e] = edge_dof[m];
            }
        }
        Ok(FunctionSpace { mesh, order, edges, node_dof, edge_dof, n_dofs: next, periodic: map })
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn node_dof(&self, v: usize) -> usize {
        self.node_dof[v]
    }

    pub fn edge_dof(&self, a: usize, b: usize) -> Option<usize> {
        if self.order == Order::P1 {
            return None;
        }
        self.edges.find(a, b).map(|e| self.edge_dof[e])
    }

    /// Global DOFs of triangle `t`; the first `order.n_local()` are valid.
    pub fn local_dofs(&self, t: usize) -> [usize; 6] {
        let tri = self.mesh.triangles[t];
        let mut d = [0; 6];
        for k in 0..3 {
            d[k] = self.node_dof[tri[k]];
        }
        if self.order == Order::P2 {
            let te = self.edges.tri_edges[t];
            for k in 0..3 {
                d[3 + k] = self.edge_dof[te[k]];
            }
        }
        d
    }

    /// DOFs of a boundary edge: the two ends, then the midpoint for P2.
    pub fn boundary_edge_dofs(&self, e: &BoundaryEdge) -> [usize; 3] {
        let [a, b] = e.nodes;
        let mid = self.edge_dof(a, b).unwrap_or(usize::MAX);
        [self.node_dof[a], self.node_dof[b], mid]
    }

    /// Basis values and gradients on triangle `t` at barycentric `l`.
    pub fn basis(&self, t: usize, l: [f64; 3]) -> ([f64; 6], [[f64; 2]; 6]) {
        let g = geometry(self.mesh.vertices(t));
        match self.order {
            Order::P1 => {
                let mut v = [0.0; 6];
                let mut d = [[0.0; 2]; 6];
                v[..3].copy_from_slice(&l);
                d[..3].copy_from_slice(&g.grad_l);
                (v, d)
            }
            Order::P2 => (p2_values(l), p2_grads(l, &g)),
        }
    }

    pub fn eval(&self, u: &[f64], t: usize, l: [f64; 3]) -> f64 {
        let (v, _) = self.basis(t, l);
        let d = self.local_dofs(t);
        (0..self.order.n_local()).map(|k| v[k] * u[d[k]]).sum()
    }

    pub fn eval_c(&self, u: &[Complex64], t: usize, l: [f64; 3]) -> Complex64 {
        let (v, _) = self.basis(t, l);
        let d = self.local_dofs(t);
        (0..self.order.n_local()).map(|k| u[d[k]] * v[k]).sum()
    }

    pub fn grad(&self, u: &[f64], t: usize, l: [f64; 3]) -> [f64; 2] {
        let (_, g) = self.basis(t, l);
        let d = self.local_dofs(t);
        let mut out = [0.0; 2];
        for k in 0..self.order.n_local() {
            out[0] += g[k][0] * u[d[k]];
            out[1] += g[k][1] * u[d[k]];
        }
        out
    }

    pub fn grad_c(&self, u: &[Complex64], t: usize, l: [f64; 3]) -> [Complex64; 2] {
        let (_, g) = self.basis(t, l);
        let d = self.local_dofs(t);
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for k in 0..self.order.n_local() {
            out[0] += u[d[k]] * g[k][0];
            out[1] += u[d[k]] * g[k][1];
        }
        out
    }

    /// Values at the mesh vertices.
    pub fn vertex_values<T: Copy>(&self, u: &[T]) -> Vec<T> {
        self.node_dof.iter().map(|&d| u[d]).collect()
    }

    /// Interpolate a function at every DOF location.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        let mut u = vec![0.0; self.n_dofs];
        for (v, p) in self.mesh.nodes.iter().enumerate() {
            u[self.node_dof[v]] = f(*p);
        }
        if self.order == Order::P2 {
            for (e, &[a, b]) in self.edges.edges.iter().enumerate() {
                let (p, q) = (self.mesh.nodes[a], self.mesh.nodes[b]);
                u[self.edge_dof[e]] = f([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]);
            }
        }
        u
    }

    /// DOF layout of this space's trace on the edges tagged `tag`, aligned
    /// with the segments of `line` (matched by abscissa).
    pub fn trace(&self, tag: BoundaryTag, line: &LineMesh) -> Result<SegmentDofs> {
        self.mesh.require_tag(tag)?;
        let tol = 1e-9 * (line.xs[line.xs.len() - 1] - line.xs[0]).abs().max(1e-300);
        let mut by_left: Vec<(f64, [usize; 3])> = Vec::new();
        for e in self.mesh.edges_with_tag(tag) {
            let d = self.boundary_edge_dofs(e);
            let (xa, xb) = (self.mesh.nodes[e.nodes[0]][0], self.mesh.nodes[e.nodes[1]][0]);
            if xa < xb {
                by_left.push((xa, d));
            } else {
                by_left.push((xb, [d[1], d[0], d[2]]));
            }
        }
        by_left.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if by_left.len() != line.n_segments() {
            return Err(Error::Mesh(format!(
                "`{}` has {} edges but the interface line has {} segments",
                tag.name(),
                by_left.len(),
                line.n_segments()
            )));
        }
        for (s, (x, _)) in by_left.iter().enumerate() {
            if (x - line.xs[s]).abs() > tol {
                return Err(Error::Mesh(format!(
                    "`{}` edge starting at x = {x} does not match interface node x = {}",
                    tag.name(),
                    line.xs[s]
                )));
            }
        }
        Ok(SegmentDofs { order: self.order, dofs: by_left.into_iter().map(|(_, d)| d).collect(), n_dofs: self.n_dofs })
    }
}

/// A straight 1-D mesh along x (the interface Γ⁰).
#[derive(Clone, Debug, PartialEq)]
pub struct LineMesh {
    pub xs: Vec<f64>,
}

impl LineMesh {
    pub fn new(xs: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("line mesh needs at least two increasing nodes"));
        }
        Ok(LineMesh { xs })
    }

    pub fn n_segments(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.xs[self.xs.len() - 1] - self.xs[0]
    }
}

/// Per-segment DOF triples (ends, then midpoint for P2).
#[derive(Clone, Debug)]
pub struct SegmentDofs {
    pub order: Order,
    pub dofs: Vec<[usize; 3]>,
    pub n_dofs: usize,
}

impl SegmentDofs {
    pub fn n_local(&self) -> usize {
        if self.order == Order::P2 {
            3
        } else {
            2
        }
    }

    /// Value and x-derivative of `u` at parameter t of segment `s` of `line`.
    pub fn eval<T>(&self, line: &LineMesh, u: &[T], s: usize, t: f64) -> (T, T)
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
    {
        let h = line.xs[s + 1] - line.xs[s];
        let (v, d) = line_basis(self.order == Order::P2, t);
        let mut val = T::default();
        let mut der = T::default();
        for k in 0..self.n_local() {
            val = val + u[self.dofs[s][k]] * v[k];
            der = der + u[self.dofs[s][k]] * (d[k] / h);
        }
        (val, der)
    }
}

/// Lagrange space on a [`LineMesh`]: vertex DOFs first, then midpoints.
#[derive(Clone, Debug)]
pub struct LineSpace {
    pub order: Order,
    pub n_vertices: usize,
}

impl LineSpace {
    pub fn new(line: &LineMesh, order: Order) -> Self {
        LineSpace { order, n_vertices: line.xs.len() }
    }

    pub fn n_dofs(&self) -> usize {
        match self.order {
            Order::P1 => self.n_vertices,
            Order::P2 => 2 * self.n_vertices - 1,
        }
    }

    pub fn segments(&self) -> SegmentDofs {
        let m = self.n_vertices;
        let dofs = (0..m - 1)
            .map(|s| [s, s + 1, if self.order == Order::P2 { m + s } else { usize::MAX }])
            .collect();
        SegmentDofs { order: self.order, dofs, n_dofs: self.n_dofs() }
    }

    /// Abscissa of every DOF.
    pub fn dof_points(&self, line: &LineMesh) -> Vec<f64> {
        let mut x = line.xs.clone();
        if self.order == Order::P2 {
            x.extend(line.xs.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{cell_base_mesh, pair_periodic_nodes};

    #[test]
    fn p2_dof_counts() {
        let m = Arc::new(cell_base_mesh(10, (0.1, 0.9)).unwrap());
        let s = FunctionSpace::new(m.clone(), Order::P2);
        assert_eq!(s.n_dofs(), 21 * 21);
        let pm = pair_periodic_nodes(&m, BoundaryTag::PeriodicLeft, BoundaryTag::PeriodicRight).unwrap();
        let sp = FunctionSpace::periodic(m.clone(), Order::P2, pm.clone()).unwrap();
        assert_eq!(sp.n_dofs(), 21 * 21 - 21);
        for &(a, b) in &pm.pairs {
            assert_eq!(sp.node_dof(a), sp.node_dof(b));
        }
        let s1 = FunctionSpace::periodic(m, Order::P1, pm).unwrap();
        assert_eq!(s1.n_dofs(), 121 - 11);
    }
}
