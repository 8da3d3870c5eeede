use std::collections::HashMap;

use rayon::prelude::*;

use super::Vec3;
use crate::error::{Error, Result};

/// Faces with less area than this (m²) are rejected.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Indexed triangle mesh, positions in meters, counter-clockwise faces.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Builds a mesh, rejecting out-of-range indices, degenerate faces and
    /// duplicated faces.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let count = vertices.len();
        let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            for &index in f {
                if index >= count {
                    return Err(Error::IndexOutOfRange { face: fi, index, count });
                }
            }
            let area = triangle_area(&vertices, f);
            if !(area >= DEGENERATE_AREA) {
                return Err(Error::DegenerateFace { face: fi, area });
            }
            let mut key = *f;
            key.sort_unstable();
            if let Some(&other) = seen.get(&key) {
                return Err(Error::DuplicateFace { face: fi, other });
            }
            seen.insert(key, fi);
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Same topology with new positions. The result is validated again.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::invalid(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Self::new(vertices, self.faces.clone())
    }

    pub fn total_area(&self) -> f64 {
        self.faces.iter().map(|f| triangle_area(&self.vertices, f)).sum()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        bounds_of(&self.vertices)
    }
}

pub(crate) fn bounds_of(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

fn triangle_area(vertices: &[Vec3], f: &[usize; 3]) -> f64 {
    let a = vertices[f[0]];
    0.5 * (vertices[f[1]] - a).cross(&(vertices[f[2]] - a)).norm()
}

/// Lumped vertex masses: each face hands a third of its mass to each corner.
pub fn vertex_masses(mesh: &TriangleMesh, area_density: f64) -> Result<Vec<f64>> {
    if !(area_density > 0.0) || !area_density.is_finite() {
        return Err(Error::invalid(format!(
            "area density must be positive, got {area_density}"
        )));
    }
    let mut masses = vec![0.0; mesh.vertex_count()];
    for f in mesh.faces() {
        let share = area_density * triangle_area(mesh.vertices(), f) / 3.0;
        for &v in f {
            masses[v] += share;
        }
    }
    Ok(masses)
}

/// Per-face area and unit normal of a validated mesh.
pub fn face_areas_normals(mesh: &TriangleMesh) -> Result<Vec<(f64, Vec3)>> {
    face_areas_normals_of(mesh.vertices(), mesh.faces())
}

/// Per-face area and unit normal for arbitrary positions over fixed faces.
pub fn face_areas_normals_of(positions: &[Vec3], faces: &[[usize; 3]]) -> Result<Vec<(f64, Vec3)>> {
    faces
        .par_iter()
        .enumerate()
        .map(|(fi, f)| {
            let a = positions[f[0]];
            let n = (positions[f[1]] - a).cross(&(positions[f[2]] - a));
            let len = n.norm();
            if !(0.5 * len >= DEGENERATE_AREA) {
                return Err(Error::DegenerateFace {
                    face: fi,
                    area: 0.5 * len,
                });
            }
            Ok((0.5 * len, n / len))
        })
        .collect()
}

/// Area-weighted average of incident face normals, normalized.
pub fn vertex_normals(mesh: &TriangleMesh) -> Result<Vec<Vec3>> {
    vertex_normals_of(mesh.vertices(), mesh.faces())
}

pub fn vertex_normals_of(positions: &[Vec3], faces: &[[usize; 3]]) -> Result<Vec<Vec3>> {
    let mut acc = vec![Vec3::zeros(); positions.len()];
    let mut touched = vec![false; positions.len()];
    for f in faces {
        let a = positions[f[0]];
        // Unnormalized cross product = 2 * area * normal.
        let n = (positions[f[1]] - a).cross(&(positions[f[2]] - a));
        for &v in f {
            acc[v] += n;
            touched[v] = true;
        }
    }
    acc.into_iter()
        .zip(touched)
        .enumerate()
        .map(|(i, (n, t))| {
            if !t {
                return Err(Error::IsolatedVertex(i));
            }
            let len = n.norm();
            if !(len > 0.0) || !len.is_finite() {
                return Err(Error::invalid(format!("vertex {i} has a vanishing normal")));
            }
            Ok(n / len)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_faces() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(matches!(
            TriangleMesh::new(v.clone(), vec![[0, 1, 3]]),
            Err(Error::IndexOutOfRange { index: 3, .. })
        ));
        let collinear = vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0];
        assert!(matches!(
            TriangleMesh::new(collinear, vec![[0, 1, 2]]),
            Err(Error::DegenerateFace { .. })
        ));
        assert!(matches!(
            TriangleMesh::new(v, vec![[0, 1, 2], [1, 2, 0]]),
            Err(Error::DuplicateFace { face: 1, other: 0 })
        ));
    }

    #[test]
    fn right_triangle_area_and_normal() {
        let m = tri();
        let an = face_areas_normals(&m).unwrap();
        assert!((an[0].0 - 0.5).abs() < 1e-15);
        assert!((an[0].1 - Vec3::z()).norm() < 1e-15);

        let flipped = TriangleMesh::new(m.vertices().to_vec(), vec![[0, 2, 1]]).unwrap();
        let an2 = face_areas_normals(&flipped).unwrap();
        assert!((an2[0].1 + Vec3::z()).norm() < 1e-15);
    }

    #[test]
    fn equilateral_masses() {
        let h = 3f64.sqrt() / 2.0;
        let m = TriangleMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::new(0.5, h, 0.0)], vec![[0, 1, 2]]).unwrap();
        let masses = vertex_masses(&m, 0.15).unwrap();
        let expected = 0.15 * (3f64.sqrt() / 4.0) / 3.0;
        for w in masses {
            assert!((w - expected).abs() < 1e-15);
            assert!((w - 0.021651).abs() < 1e-6);
        }
        assert!(vertex_masses(&m, 0.0).is_err());
        assert!(vertex_masses(&m, -1.0).is_err());
    }

    #[test]
    fn isolated_vertex_has_no_normal() {
        let m = TriangleMesh::new(
            vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::new(5.0, 5.0, 5.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(vertex_normals(&m), Err(Error::IsolatedVertex(3))));
    }
}
