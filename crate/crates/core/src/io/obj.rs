use std::fmt::Write as _;
use std::path::Path;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::meshing::TriangleMesh;

/// ASCII OBJ with `v` and 1-based `f` records. Coordinates use the
/// shortest representation that parses back to the same `f64`.
pub fn encode_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

pub fn write_obj(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    write_atomic(path, encode_obj(mesh).as_bytes())
}

/// Reads vertices and faces; polygons are fan-triangulated and
/// `v/vt/vn` face tokens keep only the vertex index. Other records are
/// ignored.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces: Vec<(usize, Vec<usize>)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let err = |m: String| Error::Parse {
            location: format!("line {}", ln + 1),
            message: m,
        };
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| err(format!("bad coordinate {t:?}")))
                    })
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(err("vertex needs three coordinates".into()));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        head.parse::<usize>()
                            .ok()
                            .filter(|&i| i >= 1)
                            .map(|i| i - 1)
                            .ok_or_else(|| err(format!("bad face index {t:?}")))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(err("face needs at least three vertices".into()));
                }
                faces.push((ln + 1, idx));
            }
            _ => {}
        }
    }
    let mut triangles = Vec::new();
    for (ln, f) in faces {
        if let Some(&bad) = f.iter().find(|&&i| i >= vertices.len()) {
            return Err(Error::Parse {
                location: format!("line {ln}"),
                message: format!("face index {} exceeds {} vertices", bad + 1, vertices.len()),
            });
        }
        for k in 1..f.len() - 1 {
            triangles.push([f[0], f[k], f[k + 1]]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn read_obj(path: &Path) -> Result<TriangleMesh> {
    parse_obj(&std::fs::read_to_string(path)?)
}
