//! Legacy ASCII VTK unstructured-grid I/O.
//!
//! Triangles are written as cell type 5 and tagged boundary edges as type 3
//! lines, so a mesh round-trips with its labels. Coordinates use Rust's
//! shortest round-trip float formatting, which is exact.

use super::{BoundaryEdge, BoundaryTag, Region, Scale, TriMesh};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Named point-data field.
pub enum VtkField<'a> {
    Scalar(&'a str, &'a [f64]),
    Vector(&'a str, &'a [[f64; 2]]),
}

pub fn write_vtk(path: &Path, mesh: &TriMesh, point_data: &[VtkField], cell_data: &[(&str, &[f64])]) -> Result<()> {
    let (nt, ne) = (mesh.n_triangles(), mesh.boundary.len());
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nmetasurf\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.n_nodes());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {} {}", nt + ne, 4 * nt + 3 * ne);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    for e in &mesh.boundary {
        let _ = writeln!(s, "2 {} {}", e.nodes[0], e.nodes[1]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", nt + ne);
    for _ in 0..nt {
        s.push_str("5\n");
    }
    for _ in 0..ne {
        s.push_str("3\n");
    }
    let _ = writeln!(s, "CELL_DATA {}", nt + ne);
    s.push_str("SCALARS region int 1\nLOOKUP_TABLE default\n");
    for r in &mesh.regions {
        let _ = writeln!(s, "{}", r.id());
    }
    for _ in 0..ne {
        s.push_str("-1\n");
    }
    s.push_str("SCALARS boundary_tag int 1\nLOOKUP_TABLE default\n");
    for _ in 0..nt {
        s.push_str("-1\n");
    }
    for e in &mesh.boundary {
        let _ = writeln!(s, "{}", e.tag.id());
    }
    for (name, vals) in cell_data {
        if vals.len() != nt {
            return Err(Error::invalid(format!("cell field `{name}` has wrong length")));
        }
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in vals.iter().chain(std::iter::repeat(&0.0).take(ne)) {
            let _ = writeln!(s, "{v}");
        }
    }
    if !point_data.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.n_nodes());
    }
    for f in point_data {
        match f {
            VtkField::Scalar(name, vals) => {
                if vals.len() != mesh.n_nodes() {
                    return Err(Error::invalid(format!("point field `{name}` has wrong length")));
                }
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for v in *vals {
                    let _ = writeln!(s, "{v}");
                }
            }
            VtkField::Vector(name, vals) => {
                if vals.len() != mesh.n_nodes() {
                    return Err(Error::invalid(format!("point field `{name}` has wrong length")));
                }
                let _ = writeln!(s, "VECTORS {name} double");
                for v in *vals {
                    let _ = writeln!(s, "{} {} 0", v[0], v[1]);
                }
            }
        }
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

struct Tokens<'a> {
    words: &'a [&'a str],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<&'a str> {
        let w = self.words.get(self.pos).copied();
        self.pos += 1;
        w
    }

    fn peek(&self) -> Option<&'a str> {
        self.words.get(self.pos).copied()
    }
}

/// Read a mesh written by [`write_vtk`] together with its scalar point data.
pub fn read_vtk(path: &Path, scale: Scale) -> Result<(TriMesh, Vec<(String, Vec<f64>)>)> {
    let text = std::fs::read_to_string(path)?;
    let bad = |m: &str| Error::Mesh(format!("{}: {m}", path.display()));
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut tok = Tokens { words: &words, pos: 0 };
    fn next<'a>(t: &mut Tokens<'a>) -> Result<&'a str> {
        t.next().ok_or_else(|| Error::Mesh("unexpected end of VTK file".into()))
    }
    let mut nodes = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut types: Vec<i32> = Vec::new();
    let mut region = Vec::new();
    let mut btag = Vec::new();
    let mut fields = Vec::new();
    let mut in_points = false;
    let mut n_points = 0;
    while let Some(w) = tok.next() {
        match w {
            "POINTS" => {
                n_points = next(&mut tok)?.parse().map_err(|_| bad("point count"))?;
                next(&mut tok)?;
                for _ in 0..n_points {
                    let x: f64 = next(&mut tok)?.parse().map_err(|_| bad("coordinate"))?;
                    let y: f64 = next(&mut tok)?.parse().map_err(|_| bad("coordinate"))?;
                    next(&mut tok)?;
                    nodes.push([x, y]);
                }
            }
            "CELLS" => {
                let n: usize = next(&mut tok)?.parse().map_err(|_| bad("cell count"))?;
                next(&mut tok)?;
                for _ in 0..n {
                    let k: usize = next(&mut tok)?.parse().map_err(|_| bad("cell size"))?;
                    let mut c = Vec::with_capacity(k);
                    for _ in 0..k {
                        c.push(next(&mut tok)?.parse().map_err(|_| bad("cell index"))?);
                    }
                    cells.push(c);
                }
            }
            "CELL_TYPES" => {
                let n: usize = next(&mut tok)?.parse().map_err(|_| bad("type count"))?;
                for _ in 0..n {
                    types.push(next(&mut tok)?.parse().map_err(|_| bad("cell type"))?);
                }
            }
            "CELL_DATA" => {
                next(&mut tok)?;
                in_points = false;
            }
            "POINT_DATA" => {
                next(&mut tok)?;
                in_points = true;
            }
            "SCALARS" => {
                let name = next(&mut tok)?.to_string();
                next(&mut tok)?;
                if tok.peek() == Some("1") {
                    tok.next();
                }
                if tok.peek() == Some("LOOKUP_TABLE") {
                    tok.next();
                    next(&mut tok)?;
                }
                let n = if in_points { n_points } else { cells.len() };
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    v.push(next(&mut tok)?.parse::<f64>().map_err(|_| bad("scalar value"))?);
                }
                match (in_points, name.as_str()) {
                    (false, "region") => region = v,
                    (false, "boundary_tag") => btag = v,
                    (true, _) => fields.push((name, v)),
                    _ => {}
                }
            }
            _ => {}
        }
    }
    if types.len() != cells.len() || region.len() != cells.len() || btag.len() != cells.len() {
        return Err(bad("missing CELL_TYPES or label data"));
    }
    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    let mut boundary = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        match types[i] {
            5 => {
                triangles.push([c[0], c[1], c[2]]);
                regions.push(Region::from_id(region[i] as i32).ok_or_else(|| bad("region label"))?);
            }
            3 => boundary.push(BoundaryEdge {
                nodes: [c[0], c[1]],
                tag: BoundaryTag::from_id(btag[i] as i32).ok_or_else(|| bad("boundary tag"))?,
            }),
            _ => return Err(bad("unsupported cell type")),
        }
    }
    Ok((TriMesh::new(nodes, triangles, regions, boundary, scale)?, fields))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::cell_base_mesh;

    #[test]
    fn roundtrip_is_exact() {
        let mut m = cell_base_mesh(10, (0.1, 0.9)).unwrap();
        m.nodes[13][0] += 1.0 / 3.0 * 1e-3;
        let f: Vec<f64> = m.nodes.iter().map(|p| (p[0] * 7.0).sin() / 3.0).collect();
        let dir = std::env::temp_dir().join(format!("metasurf_vtk_{}", std::process::id()));
        let path = dir.join("m.vtk");
        write_vtk(&path, &m, &[VtkField::Scalar("f", &f)], &[]).unwrap();
        let (r, fields) = read_vtk(&path, Scale::Micro).unwrap();
        assert_eq!(r.nodes, m.nodes);
        assert_eq!(r.triangles, m.triangles);
        assert_eq!(r.regions, m.regions);
        assert_eq!(r.boundary, m.boundary);
        assert_eq!(fields[0].1, f);
        let _ = std::fs::remove_dir_all(dir);
    }
}
