//! Triangle meshes and area-uniform surface sampling.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Point3, PointCloud};

use super::{cloud_from_points, IoError};

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Build a mesh, validating that every face index is in range and every
    /// vertex is finite. Zero-area faces are allowed here; they simply never
    /// get sampled.
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self, IoError> {
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(IoError::DegenerateCloud);
        }
        for face in &faces {
            if face.iter().any(|&i| i >= vertices.len()) {
                return Err(IoError::UnsupportedFormat {
                    path: String::new(),
                    msg: format!("face index out of range (vertices: {})", vertices.len()),
                });
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    fn face_area(&self, face: [usize; 3]) -> f64 {
        let a = self.vertices[face[0]];
        let b = self.vertices[face[1]];
        let c = self.vertices[face[2]];
        (b - a).cross(c - a).norm() * 0.5
    }

    pub fn total_area(&self) -> f64 {
        self.faces.iter().map(|&f| self.face_area(f)).sum()
    }
}

/// Load a triangle mesh from OBJ `v`/`f` lines. Faces with more than three
/// vertices are fan-triangulated; 1-based and negative (relative) indices
/// are both handled.
pub fn load_mesh_obj(path: impl AsRef<Path>) -> Result<TriangleMesh, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let mut vertices: Vec<Point3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .map(|f| {
                        f.parse()
                            .map_err(|_| IoError::parse(path, line_no, format!("bad number {f:?}")))
                    })
                    .collect::<Result<_, _>>()?;
                if coords.len() != 3 && coords.len() != 4 {
                    return Err(IoError::parse(path, line_no, "vertex needs 3 coordinates"));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut corner_ids = Vec::new();
                for field in fields {
                    // "i", "i/t", "i//n", "i/t/n" forms; only the vertex id matters.
                    let vid = field.split('/').next().unwrap_or("");
                    let signed: i64 = vid.parse().map_err(|_| {
                        IoError::parse(path, line_no, format!("bad face index {field:?}"))
                    })?;
                    let resolved = if signed > 0 {
                        (signed - 1) as usize
                    } else if signed < 0 {
                        let back = (-signed) as usize;
                        if back > vertices.len() {
                            return Err(IoError::parse(
                                path,
                                line_no,
                                "relative index out of range",
                            ));
                        }
                        vertices.len() - back
                    } else {
                        return Err(IoError::parse(path, line_no, "face index 0 is invalid"));
                    };
                    if resolved >= vertices.len() {
                        return Err(IoError::parse(path, line_no, "face index out of range"));
                    }
                    corner_ids.push(resolved);
                }
                if corner_ids.len() < 3 {
                    return Err(IoError::parse(
                        path,
                        line_no,
                        "face needs at least 3 vertices",
                    ));
                }
                for k in 1..corner_ids.len() - 1 {
                    faces.push([corner_ids[0], corner_ids[k], corner_ids[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Sample `n` points area-uniformly from the mesh surface: faces are chosen
/// with probability proportional to area, positions uniformly within each
/// face. Deterministic for a fixed seed.
pub fn sample_mesh(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud, IoError> {
    let cumulative: Vec<f64> = {
        let mut acc = 0.0;
        mesh.faces()
            .iter()
            .map(|&f| {
                acc += mesh.face_area(f);
                acc
            })
            .collect()
    };
    let total = cumulative.last().copied().unwrap_or(0.0);
    if total <= 0.0 {
        return Err(IoError::NoSurface);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.random::<f64>() * total;
        let face_idx = cumulative
            .partition_point(|&c| c <= target)
            .min(mesh.faces().len() - 1);
        let [ia, ib, ic] = mesh.faces()[face_idx];
        let a = mesh.vertices()[ia];
        let b = mesh.vertices()[ib];
        let c = mesh.vertices()[ic];
        // Uniform barycentric coordinates via the square-root trick.
        let r1 = rng.random::<f64>().sqrt();
        let r2 = rng.random::<f64>();
        let u = 1.0 - r1;
        let v = r1 * (1.0 - r2);
        let w = r1 * r2;
        points.push(a * u + b * v + c * w);
    }
    cloud_from_points(points, Path::new("<sampled mesh>"))
}
