//! Split a labeled mesh along the zero contour of a nodal level set.
//!
//! Cut triangles are split along the linear interpolant's zero set. Nodes
//! whose cut parameter falls within `snap` of an edge end get φ = 0 instead
//! (the contour moves to the node), which avoids slivers. A few passes of
//! quality-guarded Laplacian smoothing then relax the ring of nodes next to
//! the interface. Original node indices are preserved; new nodes are appended.

use super::{BoundaryEdge, PeriodicMap, Point, Region, TriMesh};
use crate::error::{Error, Result};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConformOptions {
    /// Relative edge parameter below which a cut is snapped to the node.
    pub snap: f64,
    pub smoothing_passes: usize,
    /// Minimum normalized radius ratio accepted in the design region.
    pub quality_floor: f64,
}

impl Default for ConformOptions {
    fn default() -> Self {
        ConformOptions { snap: 0.05, smoothing_passes: 3, quality_floor: 0.01 }
    }
}

/// Conforming, relabeled copy of `mesh` for the nodal level set `phi`.
/// Triangles labeled `NonDesign` are never cut or relabeled; all other
/// triangles become elastic where φ ≥ 0 and air where φ < 0.
pub fn conform_to_levelset(mesh: &TriMesh, phi: &[f64], periodic: Option<&PeriodicMap>, opts: &ConformOptions) -> Result<TriMesh> {
    if phi.len() != mesh.n_nodes() {
        return Err(Error::invalid(format!("level set has {} values for {} nodes", phi.len(), mesh.n_nodes())));
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("level set contains non-finite values"));
    }
    let mut snap = opts.snap;
    loop {
        let m = conform_once(mesh, phi, periodic, snap, opts.smoothing_passes)?;
        let q = (0..m.n_triangles())
            .filter(|&t| m.regions[t] != Region::NonDesign)
            .map(|t| m.quality(t))
            .fold(f64::INFINITY, f64::min);
        if q >= opts.quality_floor {
            return Ok(m);
        }
        if snap >= 0.25 {
            return Err(Error::Mesh(format!("conforming split reached quality {q:.3e} below floor {}", opts.quality_floor)));
        }
        snap *= 2.0;
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn label(f: &[f64]) -> Region {
    if f.iter().any(|&v| v > 0.0) {
        Region::Elastic
    } else if f.iter().any(|&v| v < 0.0) {
        Region::Air
    } else {
        Region::Elastic
    }
}

fn conform_once(mesh: &TriMesh, phi: &[f64], periodic: Option<&PeriodicMap>, snap: f64, passes: usize) -> Result<TriMesh> {
    let design = |t: usize| mesh.regions[t] != Region::NonDesign;
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if !design(t) {
            continue;
        }
        for k in 0..3 {
            let e = key(tri[k], tri[(k + 1) % 3]);
            if seen.insert(e) {
                edges.push(e);
            }
        }
    }

    let mut f = phi.to_vec();
    loop {
        let mut changed = false;
        for &(a, b) in &edges {
            let (fa, fb) = (f[a], f[b]);
            if fa * fb < 0.0 {
                let t = fa / (fa - fb);
                if t < snap {
                    f[a] = 0.0;
                    changed = true;
                } else if t > 1.0 - snap {
                    f[b] = 0.0;
                    changed = true;
                }
            }
        }
        if let Some(p) = periodic {
            for &(m, s) in &p.pairs {
                if (f[m] == 0.0) != (f[s] == 0.0) {
                    f[m] = 0.0;
                    f[s] = 0.0;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut nodes = mesh.nodes.clone();
    let mut cut: HashMap<(usize, usize), usize> = HashMap::new();
    for &(a, b) in &edges {
        if f[a] * f[b] < 0.0 {
            // interpolate from the endpoint that sorts first by (y, x) so paired
            // periodic edges produce bitwise-identical transverse coordinates
            let (pa, pb) = (nodes[a], nodes[b]);
            let (lo, hi) = if (pa[1], pa[0]) <= (pb[1], pb[0]) { (a, b) } else { (b, a) };
            let t = f[lo] / (f[lo] - f[hi]);
            let (pl, ph) = (nodes[lo], nodes[hi]);
            nodes.push([pl[0] + t * (ph[0] - pl[0]), pl[1] + t * (ph[1] - pl[1])]);
            f.push(0.0);
            cut.insert((a, b), nodes.len() - 1);
        }
    }
    let cut_of = |a: usize, b: usize| cut.get(&key(a, b)).copied();

    let mut triangles = Vec::with_capacity(mesh.n_triangles() + 2 * cut.len());
    let mut regions = Vec::with_capacity(triangles.capacity());
    let push = |tri: [usize; 3], f: &[f64], triangles: &mut Vec<[usize; 3]>, regions: &mut Vec<Region>| {
        triangles.push(tri);
        regions.push(label(&[f[tri[0]], f[tri[1]], f[tri[2]]]));
    };
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let cuts: Vec<Option<usize>> = (0..3).map(|k| cut_of(tri[k], tri[(k + 1) % 3])).collect();
        if !design(t) {
            // a non-design neighbour of a cut edge is split to stay conforming
            // but keeps its label
            let r = mesh.regions[t];
            match cuts.iter().position(|c| c.is_some()) {
                None => {
                    triangles.push(*tri);
                    regions.push(r);
                }
                Some(k) if cuts.iter().filter(|c| c.is_some()).count() == 1 => {
                    let p = cuts[k].unwrap();
                    let (a, b, z) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                    triangles.extend([[a, p, z], [p, b, z]]);
                    regions.extend([r, r]);
                }
                Some(_) => return Err(Error::Mesh(format!("non-design triangle {t} cut on two edges"))),
            }
            continue;
        }
        match cuts.iter().filter(|c| c.is_some()).count() {
            0 => push(*tri, &f, &mut triangles, &mut regions),
            1 => {
                let k = cuts.iter().position(|c| c.is_some()).unwrap();
                let p = cuts[k].unwrap();
                let (a, b, z) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                push([a, p, z], &f, &mut triangles, &mut regions);
                push([p, b, z], &f, &mut triangles, &mut regions);
            }
            2 => {
                let k = cuts.iter().position(|c| c.is_none()).unwrap();
                let (a, b, s) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let q = cuts[(k + 1) % 3].unwrap();
                let p = cuts[(k + 2) % 3].unwrap();
                push([q, s, p], &f, &mut triangles, &mut regions);
                let qual = |x: [usize; 3]| super::triangle_quality(nodes[x[0]], nodes[x[1]], nodes[x[2]]);
                let split_a = [[a, b, q], [a, q, p]];
                let split_b = [[a, b, p], [b, q, p]];
                let qa = qual(split_a[0]).min(qual(split_a[1]));
                let qb = qual(split_b[0]).min(qual(split_b[1]));
                for sub in if qa >= qb { split_a } else { split_b } {
                    push(sub, &f, &mut triangles, &mut regions);
                }
            }
            _ => return Err(Error::Mesh(format!("triangle {t} cut on all three edges"))),
        }
    }

    let mut boundary = Vec::with_capacity(mesh.boundary.len());
    for e in &mesh.boundary {
        let [a, b] = e.nodes;
        match cut_of(a, b) {
            Some(p) => {
                boundary.push(BoundaryEdge { nodes: [a, p], tag: e.tag });
                boundary.push(BoundaryEdge { nodes: [p, b], tag: e.tag });
            }
            None => boundary.push(*e),
        }
    }

    for (t, tri) in triangles.iter().enumerate() {
        let area = super::signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
        if area <= 1e-12 * mesh.total_area() {
            return Err(Error::Mesh(format!("split produced degenerate triangle {t}")));
        }
    }
    let mut out = TriMesh { nodes, triangles, regions, boundary, scale: mesh.scale };
    smooth(&mut out, mesh.n_nodes(), &f, passes);
    out.validate()?;
    Ok(out)
}

/// Quality-guarded Laplacian smoothing of the base nodes adjacent to the
/// interface (interior, design-only, off the contour).
fn smooth(m: &mut TriMesh, n_base: usize, f: &[f64], passes: usize) {
    if passes == 0 {
        return;
    }
    let adj = m.node_triangles();
    let mut on_boundary = vec![false; m.n_nodes()];
    for e in &m.boundary {
        on_boundary[e.nodes[0]] = true;
        on_boundary[e.nodes[1]] = true;
    }
    let neighbors = |v: usize| {
        let mut n: Vec<usize> = adj[v].iter().flat_map(|&t| m.triangles[t]).filter(|&u| u != v).collect();
        n.sort_unstable();
        n.dedup();
        n
    };
    let movable: Vec<(usize, Vec<usize>)> = (0..n_base)
        .filter(|&v| {
            !on_boundary[v]
                && f[v] != 0.0
                && !adj[v].is_empty()
                && adj[v].iter().all(|&t| m.regions[t] != Region::NonDesign)
        })
        .map(|v| (v, neighbors(v)))
        .filter(|(_, nb)| nb.iter().any(|&u| f[u] == 0.0))
        .collect();
    let min_q = |m: &TriMesh, v: usize| adj[v].iter().map(|&t| m.quality(t)).fold(f64::INFINITY, f64::min);
    for _ in 0..passes {
        for (v, nb) in &movable {
            let old: Point = m.nodes[*v];
            let q_old = min_q(m, *v);
            let mut c = [0.0; 2];
            for &u in nb {
                c[0] += m.nodes[u][0];
                c[1] += m.nodes[u][1];
            }
            m.nodes[*v] = [c[0] / nb.len() as f64, c[1] / nb.len() as f64];
            if min_q(m, *v) <= q_old {
                m.nodes[*v] = old;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{cell_base_mesh, pair_periodic_nodes, BoundaryTag};

    fn elastic_area(m: &TriMesh) -> f64 {
        m.region_area(|r| r == Region::Elastic)
    }

    #[test]
    fn no_interface_is_identity() {
        let m = cell_base_mesh(10, (0.1, 0.9)).unwrap();
        let c = conform_to_levelset(&m, &vec![-1.0; m.n_nodes()], None, &ConformOptions::default()).unwrap();
        assert_eq!(c.nodes, m.nodes);
        assert_eq!(c.triangles, m.triangles);
        assert_eq!(elastic_area(&c), 0.0);
    }

    #[test]
    fn vertical_interface() {
        let m = cell_base_mesh(10, (0.1, 0.9)).unwrap();
        let phi: Vec<f64> = m.nodes.iter().map(|p| p[0] - 0.53).collect();
        let c = conform_to_levelset(&m, &phi, None, &ConformOptions::default()).unwrap();
        assert!((elastic_area(&c) - 0.47 * 0.8).abs() < 1e-12);
        assert!((c.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_area_second_order() {
        let exact = std::f64::consts::PI * 0.09;
        let mut errs = Vec::new();
        for n in [20, 40, 80] {
            let m = cell_base_mesh(n, (0.1, 0.9)).unwrap();
            let phi: Vec<f64> = m.nodes.iter().map(|p| 0.3 - (p[0] - 0.5).hypot(p[1] - 0.5)).collect();
            let c = conform_to_levelset(&m, &phi, None, &ConformOptions::default()).unwrap();
            errs.push((elastic_area(&c) - exact).abs());
        }
        let rate = (errs[0] / errs[2]).log2() / 2.0;
        assert!(rate > 1.7, "{errs:?}");
    }

    #[test]
    fn periodic_pairing_survives() {
        let m = cell_base_mesh(20, (0.1, 0.9)).unwrap();
        let pm = pair_periodic_nodes(&m, BoundaryTag::PeriodicLeft, BoundaryTag::PeriodicRight).unwrap();
        // stripes crossing the periodic sides
        let phi: Vec<f64> = m.nodes.iter().map(|p| (2.0 * std::f64::consts::PI * p[0]).cos() * 0.3 + p[1] - 0.47).collect();
        let c = conform_to_levelset(&m, &phi, Some(&pm), &ConformOptions::default()).unwrap();
        let pc = pair_periodic_nodes(&c, BoundaryTag::PeriodicLeft, BoundaryTag::PeriodicRight).unwrap();
        assert!(pc.pairs.len() > pm.pairs.len());
    }
}
