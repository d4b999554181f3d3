//! Isosurface extraction.

mod tables;

use std::collections::HashMap;

use tables::{CORNER_OFFSETS, EDGE_CONNECTIONS, EDGE_TABLE, TRI_TABLE};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, DistanceField, Vec3};
use crate::par;

/// Indexed triangle mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

/// Triangles with area below this are dropped during cleanup.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some((i, t)) = triangles
            .iter()
            .enumerate()
            .find(|(_, t)| t.iter().any(|&v| v >= n))
        {
            return Err(Error::InvalidArgument(format!(
                "triangle {i} {t:?} indexes past {n} vertices"
            )));
        }
        Ok(TriangleMesh {
            vertices,
            triangles,
        })
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangles[i].map(|v| self.vertices[v]);
        0.5 * (b - a).cross(c - a).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| self.triangle_area(i))
            .sum()
    }

    /// Signed enclosed volume; positive for outward-facing counter-clockwise
    /// winding.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|v| self.vertices[v]);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    /// True when every undirected edge is shared by exactly two triangles.
    pub fn is_closed(&self) -> bool {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        !count.is_empty() && count.values().all(|&c| c == 2)
    }

    /// Drops degenerate triangles and vertices no triangle references,
    /// keeping the remaining order.
    pub fn cleanup(&mut self) {
        let verts = &self.vertices;
        self.triangles.retain(|t| {
            let [a, b, c] = t.map(|v| verts[v]);
            t[0] != t[1]
                && t[1] != t[2]
                && t[0] != t[2]
                && 0.5 * (b - a).cross(c - a).norm() >= MIN_TRIANGLE_AREA
        });
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut kept = Vec::new();
        for t in &mut self.triangles {
            for v in t.iter_mut() {
                if remap[*v] == usize::MAX {
                    remap[*v] = kept.len();
                    kept.push(self.vertices[*v]);
                }
                *v = remap[*v];
            }
        }
        self.vertices = kept;
    }
}

/// Lower grid corner and axis of each cube edge.
fn edge_geometry() -> [([usize; 3], usize); 12] {
    EDGE_CONNECTIONS.map(|(a, b)| {
        let (pa, pb) = (CORNER_OFFSETS[a], CORNER_OFFSETS[b]);
        let axis = (0..3)
            .find(|&k| pa[k] != pb[k])
            .expect("edge spans one axis");
        let lower = [pa[0].min(pb[0]), pa[1].min(pb[1]), pa[2].min(pb[2])];
        (lower, axis)
    })
}

/// Extracts the `iso` level set of `field` on a `res³` lattice of points
/// spanning `bounds` (endpoints included).
///
/// Vertices lie on lattice edges, placed by linear interpolation, and are
/// shared between neighbouring cells. Output order depends only on the
/// lattice, not on thread scheduling.
pub fn marching_cubes<F: DistanceField + ?Sized>(
    field: &F,
    bounds: &Aabb,
    res: usize,
    iso: f64,
) -> Result<TriangleMesh> {
    if res < 8 {
        return Err(Error::InvalidArgument(format!(
            "res must be >= 8, got {res}"
        )));
    }
    if !bounds.is_valid() {
        return Err(Error::InvalidArgument("bounds must have min < max".into()));
    }
    let n = res;
    let step = 1.0 / (n - 1) as f64;
    let pos = |i: usize, j: usize, k: usize| {
        bounds.lerp(Vec3::new(i as f64 * step, j as f64 * step, k as f64 * step))
    };
    let idx = |i: usize, j: usize, k: usize| (k * n + j) * n + i;
    let values: Vec<f64> = par::map_range(n, |k| {
        let mut slab = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                slab.push(field.distance(pos(i, j, k)));
            }
        }
        slab
    })
    .concat();

    // One vertex per lattice edge whose end values straddle the iso level.
    let edge_vertices: Vec<(usize, Vec3)> = par::map_range(n, |k| {
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let p = idx(i, j, k);
                let v0 = values[p];
                for axis in 0..3 {
                    let q = match axis {
                        0 if i + 1 < n => idx(i + 1, j, k),
                        1 if j + 1 < n => idx(i, j + 1, k),
                        2 if k + 1 < n => idx(i, j, k + 1),
                        _ => continue,
                    };
                    let v1 = values[q];
                    if (v0 < iso) != (v1 < iso) {
                        let a = pos(i, j, k);
                        let b = match axis {
                            0 => pos(i + 1, j, k),
                            1 => pos(i, j + 1, k),
                            _ => pos(i, j, k + 1),
                        };
                        let t = (iso - v0) / (v1 - v0);
                        out.push((p * 3 + axis, a + (b - a) * t));
                    }
                }
            }
        }
        out
    })
    .concat();
    let mut vertex_of: HashMap<usize, usize> = HashMap::with_capacity(edge_vertices.len());
    let mut vertices = Vec::with_capacity(edge_vertices.len());
    for (i, (id, v)) in edge_vertices.into_iter().enumerate() {
        vertex_of.insert(id, i);
        vertices.push(v);
    }

    let geo = edge_geometry();
    let triangles: Vec<[usize; 3]> = par::map_range(n - 1, |k| {
        let mut out = Vec::new();
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let mut case = 0usize;
                for (c, off) in CORNER_OFFSETS.iter().enumerate() {
                    if values[idx(i + off[0], j + off[1], k + off[2])] < iso {
                        case |= 1 << c;
                    }
                }
                if EDGE_TABLE[case] == 0 {
                    continue;
                }
                let vert = |e: u8| {
                    let (lo, axis) = geo[e as usize];
                    let p = idx(i + lo[0], j + lo[1], k + lo[2]);
                    vertex_of[&(p * 3 + axis)]
                };
                for tri in TRI_TABLE[case].chunks(3) {
                    if tri[0] == 255 {
                        break;
                    }
                    out.push([vert(tri[0]), vert(tri[1]), vert(tri[2])]);
                }
            }
        }
        out
    })
    .concat();

    let mut mesh = TriangleMesh {
        vertices,
        triangles,
    };
    mesh.cleanup();
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok(mesh)
}
