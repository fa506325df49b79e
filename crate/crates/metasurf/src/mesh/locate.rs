//! Bucket-grid point location.

use super::{signed_area, Point, TriMesh};

pub struct PointLocator<'m> {
    mesh: &'m TriMesh,
    lo: Point,
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'m> PointLocator<'m> {
    pub fn new(mesh: &'m TriMesh) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let side = ((mesh.n_triangles() as f64).sqrt().ceil() as usize).max(1);
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE),
        ];
        let mut loc = PointLocator { mesh, lo, cell, dims, buckets: vec![Vec::new(); side * side] };
        for t in 0..mesh.n_triangles() {
            let v = mesh.vertices(t);
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in v {
                for k in 0..2 {
                    a[k] = a[k].min(p[k]);
                    b[k] = b[k].max(p[k]);
                }
            }
            let (i0, j0) = loc.bucket(a);
            let (i1, j1) = loc.bucket(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * side + i].push(t);
                }
            }
        }
        loc
    }

    fn bucket(&self, p: Point) -> (usize, usize) {
        let f = |k: usize| (((p[k] - self.lo[k]) / self.cell[k]).floor().max(0.0) as usize).min(self.dims[k] - 1);
        (f(0), f(1))
    }

    /// Containing triangle and barycentric coordinates, tolerating points a
    /// hair outside the mesh (the closest candidate is returned).
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let (i, j) = self.bucket(p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii >= self.dims[0] as i64 || jj >= self.dims[1] as i64 {
                    continue;
                }
                for &t in &self.buckets[jj as usize * self.dims[0] + ii as usize] {
                    let [a, b, c] = self.mesh.vertices(t);
                    let area = signed_area(a, b, c);
                    let l = [signed_area(p, b, c) / area, signed_area(a, p, c) / area, signed_area(a, b, p) / area];
                    let m = l[0].min(l[1]).min(l[2]);
                    if m >= 0.0 {
                        return Some((t, l));
                    }
                    if best.as_ref().map_or(true, |x| m > x.2) {
                        best = Some((t, l, m));
                    }
                }
            }
        }
        best.filter(|b| b.2 > -1e-8).map(|(t, l, _)| (t, l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_mesh, BoundaryTag, SideTags};

    #[test]
    fn finds_points() {
        let m = generate_rect_mesh(2.0, 1.0, 7, 5, &SideTags::all(BoundaryTag::Wall)).unwrap();
        let loc = PointLocator::new(&m);
        for p in [[0.3, 0.2], [1.99, 0.99], [0.0, 0.0], [2.0, 1.0], [1.0, 0.5]] {
            let (t, l) = loc.locate(p).unwrap();
            let v = m.vertices(t);
            let q = [0, 1].map(|k| l[0] * v[0][k] + l[1] * v[1][k] + l[2] * v[2][k]);
            assert!((q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12);
        }
        assert!(loc.locate([3.0, 3.0]).is_none());
    }
}
