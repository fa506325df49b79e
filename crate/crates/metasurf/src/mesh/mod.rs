//! Triangular meshes with region labels and tagged boundaries.
//!
//! Structured and graded generators, row-by-row "zipper" strips for
//! resolution transitions, periodic pairing, merging of touching meshes,
//! point location, and level-set conforming splits live here.

mod conform;
mod locate;
mod refine;
mod vtk;

pub use conform::{conform_to_levelset, ConformOptions};
pub use locate::PointLocator;
pub use refine::refine_near;
pub use vtk::{read_vtk, write_vtk, VtkField};

use crate::error::{Error, Result};
use std::collections::HashMap;

pub type Point = [f64; 2];

/// Boundary labels used by the cell, macro, and reference geometries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Inlet,
    Outlet1,
    Outlet2,
    Interface,
    CellBottom,
    CellTop,
    PeriodicLeft,
    PeriodicRight,
    Wall,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 9] = [
        BoundaryTag::Inlet,
        BoundaryTag::Outlet1,
        BoundaryTag::Outlet2,
        BoundaryTag::Interface,
        BoundaryTag::CellBottom,
        BoundaryTag::CellTop,
        BoundaryTag::PeriodicLeft,
        BoundaryTag::PeriodicRight,
        BoundaryTag::Wall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Inlet => "inlet",
            BoundaryTag::Outlet1 => "out1",
            BoundaryTag::Outlet2 => "out2",
            BoundaryTag::Interface => "gamma0",
            BoundaryTag::CellBottom => "cell_bottom",
            BoundaryTag::CellTop => "cell_top",
            BoundaryTag::PeriodicLeft => "periodic_left",
            BoundaryTag::PeriodicRight => "periodic_right",
            BoundaryTag::Wall => "wall",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn id(self) -> i32 {
        Self::ALL.iter().position(|t| *t == self).unwrap() as i32
    }

    pub fn from_id(id: i32) -> Option<Self> {
        usize::try_from(id).ok().and_then(|i| Self::ALL.get(i).copied())
    }
}

/// Triangle region label. Non-design triangles are always air.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Air,
    Elastic,
    NonDesign,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Material {
    Air,
    Elastic,
}

impl Region {
    pub fn material(self) -> Material {
        match self {
            Region::Elastic => Material::Elastic,
            Region::Air | Region::NonDesign => Material::Air,
        }
    }

    pub fn id(self) -> i32 {
        match self {
            Region::Air => 0,
            Region::Elastic => 1,
            Region::NonDesign => 2,
        }
    }

    pub fn from_id(id: i32) -> Option<Self> {
        match id {
            0 => Some(Region::Air),
            1 => Some(Region::Elastic),
            2 => Some(Region::NonDesign),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Micro,
    Macro,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// Side of an axis-aligned rectangle, used by tagging rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

/// Boundary tagging rule for the generators: called once per boundary edge
/// with the side it lies on and its midpoint.
pub trait TagRule {
    fn tag(&self, side: Side, midpoint: Point) -> BoundaryTag;
}

impl<F: Fn(Side, Point) -> BoundaryTag> TagRule for F {
    fn tag(&self, side: Side, midpoint: Point) -> BoundaryTag {
        self(side, midpoint)
    }
}

/// One tag per rectangle side.
#[derive(Clone, Copy, Debug)]
pub struct SideTags {
    pub bottom: BoundaryTag,
    pub right: BoundaryTag,
    pub top: BoundaryTag,
    pub left: BoundaryTag,
}

impl SideTags {
    pub fn all(tag: BoundaryTag) -> Self {
        SideTags { bottom: tag, right: tag, top: tag, left: tag }
    }

    /// Unit-cell convention: bottom/top are the layer faces, left/right periodic.
    pub fn cell() -> Self {
        SideTags {
            bottom: BoundaryTag::CellBottom,
            right: BoundaryTag::PeriodicRight,
            top: BoundaryTag::CellTop,
            left: BoundaryTag::PeriodicLeft,
        }
    }
}

impl TagRule for SideTags {
    fn tag(&self, side: Side, _midpoint: Point) -> BoundaryTag {
        match side {
            Side::Bottom => self.bottom,
            Side::Right => self.right,
            Side::Top => self.top,
            Side::Left => self.left,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    pub boundary: Vec<BoundaryEdge>,
    pub scale: Scale,
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Normalized radius ratio 2r/R: 1 for equilateral, 0 for degenerate.
pub fn triangle_quality(a: Point, b: Point, c: Point) -> f64 {
    let area = signed_area(a, b, c);
    if area <= 0.0 {
        return 0.0;
    }
    let (la, lb, lc) = (dist(b, c), dist(c, a), dist(a, b));
    16.0 * area * area / (la * lb * lc * (la + lb + lc))
}

impl TriMesh {
    /// Build a mesh and check its structural invariants.
    pub fn new(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<Region>,
        boundary: Vec<BoundaryEdge>,
        scale: Scale,
    ) -> Result<Self> {
        let mesh = TriMesh { nodes, triangles, regions, boundary, scale };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertices(t);
        signed_area(a, b, c)
    }

    pub fn quality(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertices(t);
        triangle_quality(a, b, c)
    }

    pub fn min_quality(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.quality(t)).fold(f64::INFINITY, f64::min)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.vertices(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn region_area(&self, pred: impl Fn(Region) -> bool) -> f64 {
        (0..self.n_triangles()).filter(|&t| pred(self.regions[t])).map(|t| self.area(t)).sum()
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.boundary.iter().any(|e| e.tag == tag)
    }

    pub fn require_tag(&self, tag: BoundaryTag) -> Result<()> {
        if self.has_tag(tag) {
            Ok(())
        } else {
            Err(Error::MissingTag(tag))
        }
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary.iter().filter(move |e| e.tag == tag)
    }

    /// Sorted, deduplicated nodes touching edges with `tag`.
    pub fn nodes_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges_with_tag(tag).flat_map(|e| e.nodes).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        self.edges_with_tag(tag).map(|e| dist(self.nodes[e.nodes[0]], self.nodes[e.nodes[1]])).sum()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Apply an affine map x -> origin + scale * x to all nodes.
    pub fn transformed(&self, origin: Point, scale: [f64; 2], new_scale: Scale) -> TriMesh {
        assert!(scale[0] > 0.0 && scale[1] > 0.0);
        let mut m = self.clone();
        for p in &mut m.nodes {
            *p = [origin[0] + scale[0] * p[0], origin[1] + scale[1] * p[1]];
        }
        m.scale = new_scale;
        m
    }

    /// Edges used by exactly one triangle, as directed (a, b) with the
    /// triangle on the left.
    pub fn topological_boundary(&self) -> Vec<[usize; 2]> {
        let mut count: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                count.entry(key).and_modify(|e| e.0 += 1).or_insert((1, [a, b]));
            }
        }
        let mut out: Vec<[usize; 2]> =
            count.into_values().filter(|(c, _)| *c == 1).map(|(_, e)| e).collect();
        out.sort_unstable();
        out
    }

    /// Check orientation, index ranges, labels, and boundary coverage.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.regions.len() != self.triangles.len() {
            return Err(Error::Mesh("one region label per triangle required".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::Mesh(format!("triangle {t} references a missing node")));
            }
            if self.area(t) <= 0.0 {
                return Err(Error::Mesh(format!("triangle {t} has non-positive signed area")));
            }
        }
        let topo = self.topological_boundary();
        let mut tagged: HashMap<(usize, usize), usize> = HashMap::new();
        for e in &self.boundary {
            let [a, b] = e.nodes;
            *tagged.entry((a.min(b), a.max(b))).or_default() += 1;
        }
        if tagged.len() != self.boundary.len() {
            return Err(Error::Mesh("boundary edge tagged more than once".into()));
        }
        for [a, b] in &topo {
            if !tagged.contains_key(&(*a.min(b), *a.max(b))) {
                let p = self.nodes[*a];
                return Err(Error::Mesh(format!(
                    "untagged boundary edge ({a}, {b}) near ({:.6}, {:.6})",
                    p[0], p[1]
                )));
            }
        }
        if topo.len() != self.boundary.len() {
            return Err(Error::Mesh("tagged edge that is not on the boundary".into()));
        }
        Ok(())
    }

    /// Reorient tagged boundary edges so the domain lies on their left,
    /// making (dy, -dx) the outward normal.
    pub fn orient_boundary(&mut self) {
        let topo: HashMap<(usize, usize), [usize; 2]> =
            self.topological_boundary().into_iter().map(|[a, b]| ((a.min(b), a.max(b)), [a, b])).collect();
        for e in &mut self.boundary {
            let [a, b] = e.nodes;
            if let Some(d) = topo.get(&(a.min(b), a.max(b))) {
                e.nodes = *d;
            }
        }
    }

    /// Node-to-triangle adjacency.
    pub fn node_triangles(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                adj[v].push(t);
            }
        }
        adj
    }

    /// Sub-mesh of the triangles selected by `keep`, with compacted node
    /// numbering. Returns the mesh and the sub-to-parent node map. New
    /// boundary edges are tagged by `tag_new`.
    pub fn submesh(
        &self,
        keep: impl Fn(usize) -> bool,
        tag_new: impl Fn(Point) -> BoundaryTag,
    ) -> Result<(TriMesh, Vec<usize>)> {
        let mut map = vec![usize::MAX; self.n_nodes()];
        let mut parent = Vec::new();
        let mut tris = Vec::new();
        let mut regions = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if !keep(t) {
                continue;
            }
            let mut new = [0; 3];
            for (k, &v) in tri.iter().enumerate() {
                if map[v] == usize::MAX {
                    map[v] = parent.len();
                    parent.push(v);
                }
                new[k] = map[v];
            }
            tris.push(new);
            regions.push(self.regions[t]);
        }
        let nodes: Vec<Point> = parent.iter().map(|&v| self.nodes[v]).collect();
        let old_tags: HashMap<(usize, usize), BoundaryTag> = self
            .boundary
            .iter()
            .map(|e| ((e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1])), e.tag))
            .collect();
        let mut sub = TriMesh { nodes, triangles: tris, regions, boundary: Vec::new(), scale: self.scale };
        for [a, b] in sub.topological_boundary() {
            let (pa, pb) = (parent[a], parent[b]);
            let tag = match old_tags.get(&(pa.min(pb), pa.max(pb))) {
                Some(t) => *t,
                None => {
                    let (p, q) = (sub.nodes[a], sub.nodes[b]);
                    tag_new([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0])
                }
            };
            sub.boundary.push(BoundaryEdge { nodes: [a, b], tag });
        }
        sub.validate()?;
        Ok((sub, parent))
    }
}

/// Uniformly spaced coordinates a = x_0 < ... < x_n = b.
pub fn uniform_lines(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 }).collect()
}

/// Tensor-product mesh on the grid lines `xs` x `ys` with alternating
/// diagonals (mirror symmetric when the interval counts are even).
pub fn tensor_mesh(xs: &[f64], ys: &[f64], tags: &dyn TagRule, scale: Scale) -> Result<TriMesh> {
    let increasing = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]);
    if !increasing(xs) || !increasing(ys) {
        return Err(Error::invalid("grid lines must be strictly increasing with at least two entries"));
    }
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in ys {
        for &x in xs {
            nodes.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    let mid = |p: usize, q: usize| {
        let (a, b): (Point, Point) = (nodes[p], nodes[q]);
        [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
    };
    for i in 0..nx {
        let (p, q) = (id(i, 0), id(i + 1, 0));
        boundary.push(BoundaryEdge { nodes: [p, q], tag: tags.tag(Side::Bottom, mid(p, q)) });
    }
    for j in 0..ny {
        let (p, q) = (id(nx, j), id(nx, j + 1));
        boundary.push(BoundaryEdge { nodes: [p, q], tag: tags.tag(Side::Right, mid(p, q)) });
    }
    for i in (0..nx).rev() {
        let (p, q) = (id(i + 1, ny), id(i, ny));
        boundary.push(BoundaryEdge { nodes: [p, q], tag: tags.tag(Side::Top, mid(p, q)) });
    }
    for j in (0..ny).rev() {
        let (p, q) = (id(0, j + 1), id(0, j));
        boundary.push(BoundaryEdge { nodes: [p, q], tag: tags.tag(Side::Left, mid(p, q)) });
    }
    let regions = vec![Region::Air; triangles.len()];
    TriMesh::new(nodes, triangles, regions, boundary, scale)
}

/// Structured mesh of [0, width] x [0, height] with 2*nx*ny triangles.
pub fn generate_rect_mesh(width: f64, height: f64, nx: usize, ny: usize, tags: &dyn TagRule) -> Result<TriMesh> {
    if !(width > 0.0 && height > 0.0) || nx == 0 || ny == 0 {
        return Err(Error::invalid(format!(
            "rectangle needs positive size and counts, got {width} x {height}, {nx} x {ny}"
        )));
    }
    tensor_mesh(&uniform_lines(0.0, width, nx), &uniform_lines(0.0, height, ny), tags, Scale::Macro)
}

/// Grid lines on [a, b] with spacing `h_fine` inside `focus ± half_width`,
/// growing geometrically by `ratio` up to `h_coarse` away from it. Every
/// coordinate in `pins` is kept exactly as a grid line.
pub fn graded_lines(a: f64, b: f64, focus: f64, half_width: f64, h_fine: f64, h_coarse: f64, ratio: f64, pins: &[f64]) -> Vec<f64> {
    assert!(b > a && h_fine > 0.0 && h_coarse >= h_fine && ratio > 1.0);
    let spacing = |x: f64| {
        let d = ((x - focus).abs() - half_width).max(0.0);
        // spacing grows as h_fine * ratio^k over a geometric run
        (h_fine + d * (ratio - 1.0)).min(h_coarse)
    };
    let mut stops: Vec<f64> = pins.iter().copied().filter(|&p| p > a && p < b).collect();
    stops.push(b);
    stops.sort_by(|x, y| x.partial_cmp(y).unwrap());
    stops.dedup();
    let mut lines = vec![a];
    let mut start = a;
    for &stop in &stops {
        let mut pts = vec![start];
        while *pts.last().unwrap() < stop {
            let x = *pts.last().unwrap();
            let h = spacing(x).min(spacing(x + spacing(x)));
            pts.push(x + h);
        }
        let n = pts.len() - 1;
        let keep = if n > 1 && pts[n] - stop > stop - pts[n - 1] { n - 1 } else { n };
        let s = (stop - start) / (pts[keep] - start);
        for k in 1..=keep {
            lines.push(if k == keep { stop } else { start + (pts[k] - start) * s });
        }
        start = stop;
    }
    lines
}

/// Triangulate the strip between consecutive rows of nodes. Row `k` sits at
/// height `ys[k]` with abscissae `rows[k]` (sorted, sharing both endpoints).
/// Adjacent rows may have different node counts; each band is zipped by
/// always advancing the row whose next node lies further left.
pub fn zipper_strip(ys: &[f64], rows: &[Vec<f64>], bottom: BoundaryTag, top: BoundaryTag, sides: BoundaryTag, scale: Scale) -> Result<TriMesh> {
    if ys.len() != rows.len() || ys.len() < 2 || ys.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("zipper strip needs at least two increasing rows"));
    }
    let (x0, x1) = (rows[0][0], *rows[0].last().unwrap());
    for r in rows {
        if r.len() < 2 || r[0] != x0 || *r.last().unwrap() != x1 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("zipper rows must be increasing and share endpoints"));
        }
    }
    let mut nodes = Vec::new();
    let mut start = Vec::new();
    for (k, r) in rows.iter().enumerate() {
        start.push(nodes.len());
        nodes.extend(r.iter().map(|&x| [x, ys[k]]));
    }
    let mut triangles = Vec::new();
    for k in 0..rows.len() - 1 {
        let (lo, hi) = (&rows[k], &rows[k + 1]);
        let (mut i, mut j) = (0, 0);
        while i + 1 < lo.len() || j + 1 < hi.len() {
            let advance_lo = if i + 1 == lo.len() {
                false
            } else if j + 1 == hi.len() {
                true
            } else {
                lo[i + 1] <= hi[j + 1]
            };
            let (a, b) = (start[k] + i, start[k + 1] + j);
            if advance_lo {
                triangles.push([a, a + 1, b]);
                i += 1;
            } else {
                triangles.push([a, b + 1, b]);
                j += 1;
            }
        }
    }
    let mut boundary = Vec::new();
    let last = rows.len() - 1;
    for i in 0..rows[0].len() - 1 {
        boundary.push(BoundaryEdge { nodes: [start[0] + i, start[0] + i + 1], tag: bottom });
    }
    for k in 0..last {
        let (r0, r1) = (start[k] + rows[k].len() - 1, start[k + 1] + rows[k + 1].len() - 1);
        boundary.push(BoundaryEdge { nodes: [r0, r1], tag: sides });
        boundary.push(BoundaryEdge { nodes: [start[k + 1], start[k]], tag: sides });
    }
    for i in (0..rows[last].len() - 1).rev() {
        boundary.push(BoundaryEdge { nodes: [start[last] + i + 1, start[last] + i], tag: top });
    }
    let regions = vec![Region::Air; triangles.len()];
    TriMesh::new(nodes, triangles, regions, boundary, scale)
}

/// Merge meshes, identifying nodes closer than `tol`. Boundary edges shared by
/// two inputs become interior and are dropped.
pub fn merge_meshes(meshes: &[&TriMesh], tol: f64) -> Result<TriMesh> {
    if meshes.is_empty() {
        return Err(Error::invalid("nothing to merge"));
    }
    let key = |p: Point| ((p[0] / tol).round() as i64, (p[1] / tol).round() as i64);
    let mut hash: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut nodes: Vec<Point> = Vec::new();
    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    let mut edges: Vec<BoundaryEdge> = Vec::new();
    for m in meshes {
        let mut map = Vec::with_capacity(m.n_nodes());
        for &p in &m.nodes {
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = hash.get(&(kx + dx, ky + dy)) {
                        for &id in ids {
                            if dist(nodes[id], p) <= tol {
                                found = Some(id);
                                break 'search;
                            }
                        }
                    }
                }
            }
            let id = found.unwrap_or_else(|| {
                nodes.push(p);
                hash.entry((kx, ky)).or_default().push(nodes.len() - 1);
                nodes.len() - 1
            });
            map.push(id);
        }
        for (t, tri) in m.triangles.iter().enumerate() {
            triangles.push([map[tri[0]], map[tri[1]], map[tri[2]]]);
            regions.push(m.regions[t]);
        }
        for e in &m.boundary {
            edges.push(BoundaryEdge { nodes: [map[e.nodes[0]], map[e.nodes[1]]], tag: e.tag });
        }
    }
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for e in &edges {
        let [a, b] = e.nodes;
        *count.entry((a.min(b), a.max(b))).or_default() += 1;
    }
    let boundary = edges
        .into_iter()
        .filter(|e| {
            let [a, b] = e.nodes;
            count[&(a.min(b), a.max(b))] == 1
        })
        .collect();
    TriMesh::new(nodes, triangles, regions, boundary, meshes[0].scale)
}

/// Nodes identified across the periodic sides.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicMap {
    /// (master on the left side, slave on the right side)
    pub pairs: Vec<(usize, usize)>,
    /// The identified coordinate (0 for y1).
    pub axis: usize,
}

impl PeriodicMap {
    /// slave -> master lookup table sized for `n_nodes`.
    pub fn master_of(&self, n_nodes: usize) -> Vec<usize> {
        let mut m: Vec<usize> = (0..n_nodes).collect();
        for &(a, b) in &self.pairs {
            m[b] = a;
        }
        m
    }
}

/// Pair the nodes of two opposite sides by their transverse coordinate.
pub fn pair_periodic_nodes(mesh: &TriMesh, left: BoundaryTag, right: BoundaryTag) -> Result<PeriodicMap> {
    let axis = 0;
    let other = 1 - axis;
    mesh.require_tag(left)?;
    mesh.require_tag(right)?;
    let sorted = |tag| {
        let mut v = mesh.nodes_with_tag(tag);
        v.sort_by(|&a, &b| mesh.nodes[a][other].partial_cmp(&mesh.nodes[b][other]).unwrap());
        v
    };
    let (l, r) = (sorted(left), sorted(right));
    if l.len() != r.len() {
        return Err(Error::Pairing(format!(
            "node count mismatch: {} on `{}` vs {} on `{}`",
            l.len(),
            left.name(),
            r.len(),
            right.name()
        )));
    }
    let (lo, hi) = mesh.bounding_box();
    let tol = 1e-12 * (hi[other] - lo[other]).max(1.0);
    let mut pairs = Vec::with_capacity(l.len());
    for (&a, &b) in l.iter().zip(&r) {
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        if (pa[other] - pb[other]).abs() > tol {
            return Err(Error::Pairing(format!(
                "node {a} at ({}, {}) has no partner; nearest candidate {b} at ({}, {})",
                pa[0], pa[1], pb[0], pb[1]
            )));
        }
        pairs.push((a, b));
    }
    Ok(PeriodicMap { pairs, axis })
}

/// Unit-cell base mesh: n x n structured cells with the rows outside
/// `design` = (y_lo, y_hi) labeled non-design. `n` must place both design
/// bounds on grid lines.
pub fn cell_base_mesh(n: usize, design: (f64, f64)) -> Result<TriMesh> {
    let lines = uniform_lines(0.0, 1.0, n);
    for b in [design.0, design.1] {
        if !lines.iter().any(|&y| (y - b).abs() < 1e-12) {
            return Err(Error::invalid(format!("design bound {b} is not a grid line for n = {n}")));
        }
    }
    let mut ys = lines.clone();
    for y in ys.iter_mut() {
        for b in [design.0, design.1] {
            if (*y - b).abs() < 1e-12 {
                *y = b;
            }
        }
    }
    cell_tensor_mesh(&lines, &ys, design)
}

/// Cell mesh on arbitrary grid lines (both must span [0, 1]).
pub fn cell_tensor_mesh(xs: &[f64], ys: &[f64], design: (f64, f64)) -> Result<TriMesh> {
    let mut m = tensor_mesh(xs, ys, &SideTags::cell(), Scale::Micro)?;
    for t in 0..m.n_triangles() {
        let c = m.centroid(t);
        if c[1] < design.0 || c[1] > design.1 {
            m.regions[t] = Region::NonDesign;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_rect() {
        let m = generate_rect_mesh(1.0, 1.0, 1, 1, &SideTags::all(BoundaryTag::Wall)).unwrap();
        assert_eq!((m.n_triangles(), m.n_nodes(), m.boundary.len()), (2, 4, 4));
    }

    #[test]
    fn counts() {
        let m = generate_rect_mesh(1.0, 1.0, 10, 10, &SideTags::all(BoundaryTag::Wall)).unwrap();
        assert_eq!((m.n_triangles(), m.n_nodes()), (200, 121));
        assert!((m.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_dims() {
        let w = SideTags::all(BoundaryTag::Wall);
        assert!(generate_rect_mesh(0.0, 1.0, 1, 1, &w).is_err());
        assert!(generate_rect_mesh(1.0, 1.0, 0, 1, &w).is_err());
    }

    #[test]
    fn boundary_orientation_is_ccw() {
        let m = generate_rect_mesh(2.0, 1.0, 3, 2, &SideTags::all(BoundaryTag::Wall)).unwrap();
        // outward normal (dy, -dx) points away from the centroid
        for e in &m.boundary {
            let (a, b) = (m.nodes[e.nodes[0]], m.nodes[e.nodes[1]]);
            let n = [b[1] - a[1], a[0] - b[0]];
            let mid = [(a[0] + b[0]) / 2.0 - 1.0, (a[1] + b[1]) / 2.0 - 0.5];
            assert!(n[0] * mid[0] + n[1] * mid[1] > 0.0);
        }
    }

    #[test]
    fn zipper_transition() {
        let rows = vec![uniform_lines(0.0, 1.0, 8), uniform_lines(0.0, 1.0, 3), uniform_lines(0.0, 1.0, 2)];
        let m = zipper_strip(&[0.0, 0.2, 0.5], &rows, BoundaryTag::Wall, BoundaryTag::Inlet, BoundaryTag::Wall, Scale::Macro).unwrap();
        assert!((m.total_area() - 0.5).abs() < 1e-14);
        assert_eq!(m.n_triangles(), (8 + 3) + (3 + 2));
        assert_eq!(m.edges_with_tag(BoundaryTag::Inlet).count(), 2);
    }

    #[test]
    fn merge_drops_shared_edges() {
        let w = SideTags::all(BoundaryTag::Wall);
        let a = generate_rect_mesh(1.0, 1.0, 2, 2, &w).unwrap();
        let b = a.transformed([1.0, 0.0], [1.0, 1.0], Scale::Macro);
        let m = merge_meshes(&[&a, &b], 1e-9).unwrap();
        assert_eq!(m.n_nodes(), 15);
        assert_eq!(m.boundary.len(), 12);
    }

    #[test]
    fn periodic_pairs() {
        let m = cell_base_mesh(10, (0.1, 0.9)).unwrap();
        let p = pair_periodic_nodes(&m, BoundaryTag::PeriodicLeft, BoundaryTag::PeriodicRight).unwrap();
        assert_eq!(p.pairs.len(), 11);
        assert!((m.region_area(|r| r == Region::NonDesign) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn graded_lines_hit_pins() {
        let l = graded_lines(0.0, 1.0, 0.3, 0.02, 0.001, 0.05, 1.2, &[0.1, 0.9]);
        for pin in [0.0, 0.1, 0.9, 1.0] {
            assert!(l.iter().any(|&x| x == pin), "missing {pin}");
        }
        assert!(l.windows(2).all(|w| w[1] > w[0]));
        let near = l.windows(2).filter(|w| (w[0] - 0.3).abs() < 0.01).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(near < 0.0015, "{near}");
        let max = l.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(max < 0.06);
    }
}
