//! Local newest-vertex bisection.
//!
//! Each triangle is stored apex first, so its refinement edge is (t[1], t[2]).
//! The initial refinement edge is the longest one; bisecting a triangle
//! first bisects the neighbor across the refinement edge until both share
//! it, which keeps the mesh conforming.

use super::{BoundaryEdge, BoundaryTag, Point, TriMesh};
use crate::error::{Error, Result};
use std::collections::HashMap;

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

struct Nvb {
    nodes: Vec<Point>,
    tris: Vec<[usize; 3]>,
    regions: Vec<super::Region>,
    alive: Vec<bool>,
    edge_tris: HashMap<(usize, usize), Vec<usize>>,
    mids: HashMap<(usize, usize), usize>,
    boundary: HashMap<(usize, usize), BoundaryTag>,
}

impl Nvb {
    fn add(&mut self, t: [usize; 3], r: super::Region) -> usize {
        let id = self.tris.len();
        self.tris.push(t);
        self.regions.push(r);
        self.alive.push(true);
        for k in 0..3 {
            self.edge_tris.entry(key(t[k], t[(k + 1) % 3])).or_default().push(id);
        }
        id
    }

    fn kill(&mut self, id: usize) {
        self.alive[id] = false;
        let t = self.tris[id];
        for k in 0..3 {
            if let Some(v) = self.edge_tris.get_mut(&key(t[k], t[(k + 1) % 3])) {
                v.retain(|&x| x != id);
            }
        }
    }

    fn neighbor(&self, id: usize, a: usize, b: usize) -> Option<usize> {
        self.edge_tris.get(&key(a, b)).and_then(|v| v.iter().copied().find(|&x| x != id))
    }

    fn bisect(&mut self, id: usize) -> Result<()> {
        let [t0, t1, t2] = self.tris[id];
        let k = key(t1, t2);
        if let Some(tag) = self.boundary.get(&k).copied() {
            if matches!(tag, BoundaryTag::PeriodicLeft | BoundaryTag::PeriodicRight) {
                return Err(Error::Mesh("local refinement reached a periodic side".into()));
            }
        }
        let m = match self.mids.get(&k) {
            Some(&m) => m,
            None => {
                let (a, b) = (self.nodes[t1], self.nodes[t2]);
                self.nodes.push([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
                let m = self.nodes.len() - 1;
                self.mids.insert(k, m);
                if let Some(tag) = self.boundary.remove(&k) {
                    self.boundary.insert(key(t1, m), tag);
                    self.boundary.insert(key(m, t2), tag);
                }
                m
            }
        };
        let r = self.regions[id];
        self.kill(id);
        self.add([m, t0, t1], r);
        self.add([m, t2, t0], r);
        Ok(())
    }

    fn refine(&mut self, id: usize, depth: usize) -> Result<()> {
        if depth > 200 {
            return Err(Error::Mesh("bisection closure did not terminate".into()));
        }
        loop {
            let [_, a, b] = self.tris[id];
            match self.neighbor(id, a, b) {
                None => return self.bisect(id),
                Some(nb) => {
                    let [_, c, d] = self.tris[nb];
                    if key(c, d) == key(a, b) {
                        self.bisect(id)?;
                        return self.bisect(nb);
                    }
                    self.refine(nb, depth + 1)?;
                }
            }
        }
    }
}

fn point_triangle_distance(p: Point, v: [Point; 3]) -> f64 {
    let side = |a: Point, b: Point| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    if (0..3).all(|k| side(v[k], v[(k + 1) % 3]) >= 0.0) {
        return 0.0;
    }
    (0..3)
        .map(|k| {
            let (a, b) = (v[k], v[(k + 1) % 3]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
            (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
        })
        .fold(f64::MAX, f64::min)
}

/// Bisect until every triangle within `radius` of `center` has its longest
/// edge at most `h`. Existing nodes keep their indices; tags and regions
/// are inherited.
pub fn refine_near(mesh: &TriMesh, center: Point, radius: f64, h: f64) -> Result<TriMesh> {
    if !(h > 0.0 && radius >= 0.0) {
        return Err(Error::invalid("refinement size must be positive"));
    }
    let mut s = Nvb {
        nodes: mesh.nodes.clone(),
        tris: Vec::new(),
        regions: Vec::new(),
        alive: Vec::new(),
        edge_tris: HashMap::new(),
        mids: HashMap::new(),
        boundary: mesh.boundary.iter().map(|e| (key(e.nodes[0], e.nodes[1]), e.tag)).collect(),
    };
    let len = |nodes: &[Point], a: usize, b: usize| (nodes[a][0] - nodes[b][0]).hypot(nodes[a][1] - nodes[b][1]);
    for (t, &v) in mesh.triangles.iter().enumerate() {
        // rotate (keeping orientation) so the longest edge is (t[1], t[2])
        let k = (0..3)
            .max_by(|&i, &j| {
                let li = len(&s.nodes, v[(i + 1) % 3], v[(i + 2) % 3]);
                let lj = len(&s.nodes, v[(j + 1) % 3], v[(j + 2) % 3]);
                li.partial_cmp(&lj).unwrap().then(j.cmp(&i))
            })
            .unwrap();
        s.add([v[k], v[(k + 1) % 3], v[(k + 2) % 3]], mesh.regions[t]);
    }
    loop {
        let marked: Vec<usize> = (0..s.tris.len())
            .filter(|&t| s.alive[t])
            .filter(|&t| {
                let [a, b, c] = s.tris[t];
                let longest = len(&s.nodes, b, c).max(len(&s.nodes, a, b)).max(len(&s.nodes, a, c));
                longest > h * (1.0 + 1e-9) && point_triangle_distance(center, [s.nodes[a], s.nodes[b], s.nodes[c]]) <= radius
            })
            .collect();
        if marked.is_empty() {
            break;
        }
        for t in marked {
            if s.alive[t] {
                s.refine(t, 0)?;
            }
        }
    }
    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    for t in 0..s.tris.len() {
        if s.alive[t] {
            triangles.push(s.tris[t]);
            regions.push(s.regions[t]);
        }
    }
    let mut boundary: Vec<BoundaryEdge> = s.boundary.iter().map(|(&(a, b), &tag)| BoundaryEdge { nodes: [a, b], tag }).collect();
    boundary.sort_by_key(|e| e.nodes);
    let mut out = TriMesh { nodes: s.nodes, triangles, regions, boundary, scale: mesh.scale };
    out.orient_boundary();
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::DESIGN_BAND;
    use crate::mesh::cell_base_mesh;

    #[test]
    fn local_refinement_is_conforming_and_graded() {
        let m = cell_base_mesh(10, DESIGN_BAND).unwrap();
        let r = refine_near(&m, [0.5, 0.5], 0.02, 0.005).unwrap();
        assert!((r.total_area() - 1.0).abs() < 1e-12);
        assert!(r.min_quality() > 0.5);
        assert_eq!(&r.nodes[..m.n_nodes()], &m.nodes[..]);
        for t in 0..r.n_triangles() {
            let c = r.centroid(t);
            if (c[0] - 0.5).hypot(c[1] - 0.5) < 0.01 {
                assert!(r.area(t) < 0.005 * 0.005);
            }
        }
        let (_, _) = (r.boundary_length(BoundaryTag::CellBottom), r.boundary_length(BoundaryTag::CellTop));
        assert!((r.boundary_length(BoundaryTag::CellBottom) - 1.0).abs() < 1e-12);
    }
}
