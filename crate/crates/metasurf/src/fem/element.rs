//! Reference basis functions on straight triangles and segments.

use crate::mesh::Point;

/// Area and constant barycentric gradients of a straight triangle.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub area: f64,
    pub grad_l: [[f64; 2]; 3],
}

pub fn geometry(v: [Point; 3]) -> ElementGeometry {
    let (x0, x1, x2) = (v[0], v[1], v[2]);
    let det = (x1[0] - x0[0]) * (x2[1] - x0[1]) - (x2[0] - x0[0]) * (x1[1] - x0[1]);
    let g1 = [(x2[1] - x0[1]) / det, -(x2[0] - x0[0]) / det];
    let g2 = [-(x1[1] - x0[1]) / det, (x1[0] - x0[0]) / det];
    ElementGeometry { area: 0.5 * det, grad_l: [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2] }
}

/// P2 basis at barycentric `l`: vertices 0..3, then midpoints of edges
/// (0,1), (1,2), (2,0).
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

pub fn p2_grads(l: [f64; 3], g: &ElementGeometry) -> [[f64; 2]; 6] {
    let gl = g.grad_l;
    let mut out = [[0.0; 2]; 6];
    for k in 0..2 {
        for i in 0..3 {
            out[i][k] = (4.0 * l[i] - 1.0) * gl[i][k];
        }
        for (m, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            out[3 + m][k] = 4.0 * (l[i] * gl[j][k] + l[j] * gl[i][k]);
        }
    }
    out
}

/// Segment basis at t in [0, 1]: values and d/dt. P1 uses two entries,
/// P2 three (ends, then midpoint).
pub fn line_basis(p2: bool, t: f64) -> ([f64; 3], [f64; 3]) {
    if p2 {
        (
            [(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0), 4.0 * t * (1.0 - t)],
            [4.0 * t - 3.0, 4.0 * t - 1.0, 4.0 - 8.0 * t],
        )
    } else {
        ([1.0 - t, t, 0.0], [-1.0, 1.0, 0.0])
    }
}
