use nalgebra::{Matrix2, Matrix3x2};

use super::{TriangleMesh, Vec3};
use crate::error::{Error, Result};

/// Rest-state reference of every face: the inverse of the 2×2 matrix whose
/// columns are the two rest edges expressed in an orthonormal tangent basis
/// of the face, and the rest area.
#[derive(Debug, Clone)]
pub struct RestFrame {
    pub inv_rest: Vec<Matrix2<f64>>,
    pub areas: Vec<f64>,
}

pub fn rest_frames(mesh: &TriangleMesh) -> Result<RestFrame> {
    let p = mesh.vertices();
    let mut inv_rest = Vec::with_capacity(mesh.face_count());
    let mut areas = Vec::with_capacity(mesh.face_count());
    for (fi, f) in mesh.faces().iter().enumerate() {
        let e1 = p[f[1]] - p[f[0]];
        let e2 = p[f[2]] - p[f[0]];
        let n = e1.cross(&e2);
        let area = 0.5 * n.norm();
        let t1 = e1.normalize();
        let t2 = n.normalize().cross(&t1);
        let d = Matrix2::new(e1.dot(&t1), e2.dot(&t1), e1.dot(&t2), e2.dot(&t2));
        let inv = d
            .try_inverse()
            .filter(|m| m.iter().all(|x| x.is_finite()))
            .ok_or(Error::DegenerateFace { face: fi, area })?;
        inv_rest.push(inv);
        areas.push(area);
    }
    Ok(RestFrame { inv_rest, areas })
}

/// 3×2 deformation gradient of `face` mapping rest tangent coordinates to
/// deformed positions.
pub fn deformation_gradient(frames: &RestFrame, face: usize, tri: [usize; 3], positions: &[Vec3]) -> Matrix3x2<f64> {
    let x0 = positions[tri[0]];
    let ds = Matrix3x2::from_columns(&[positions[tri[1]] - x0, positions[tri[2]] - x0]);
    ds * frames.inv_rest[face]
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;

    fn sheet() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(0.7, 0.1, 0.2),
                Vec3::new(0.1, 0.9, -0.3),
                Vec3::new(0.8, 1.0, 0.4),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap()
    }

    #[test]
    fn rest_state_is_identity() {
        let m = sheet();
        let fr = rest_frames(&m).unwrap();
        for (fi, f) in m.faces().iter().enumerate() {
            let f_ = deformation_gradient(&fr, fi, *f, m.vertices());
            let c = f_.transpose() * f_;
            assert!((c - Matrix2::identity()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn scaled_copy_gives_scaled_metric() {
        let m = sheet();
        let fr = rest_frames(&m).unwrap();
        let scaled: Vec<Vec3> = m.vertices().iter().map(|v| v * 1.1).collect();
        for (fi, f) in m.faces().iter().enumerate() {
            let f_ = deformation_gradient(&fr, fi, *f, &scaled);
            let c = f_.transpose() * f_;
            assert!((c - Matrix2::identity() * 1.21).abs().max() < 1e-12);
        }
    }

    #[test]
    fn reflection_keeps_metric() {
        let m = sheet();
        let fr = rest_frames(&m).unwrap();
        let rot = Rotation3::from_scaled_axis(Vec3::new(0.3, -0.2, 0.9));
        let mirrored: Vec<Vec3> = m.vertices().iter().map(|v| rot * Vec3::new(-v.x, v.y, v.z)).collect();
        for (fi, f) in m.faces().iter().enumerate() {
            let f_ = deformation_gradient(&fr, fi, *f, &mirrored);
            let f0 = deformation_gradient(&fr, fi, *f, m.vertices());
            let c = f_.transpose() * f_;
            assert!((c - Matrix2::identity()).abs().max() < 1e-12);
            // The columns carry the orientation flip: the cross product of
            // the two columns reverses relative to the mirrored rest normal.
            let n = f_.column(0).cross(&f_.column(1));
            let n0 = f0.column(0).cross(&f0.column(1));
            let n0_mirrored = rot * Vec3::new(-n0.x, n0.y, n0.z);
            assert!((n + n0_mirrored).norm() < 1e-12);
        }
    }
}
