//! Rigged parametric body: shape blendshapes, joint hierarchy, forward
//! kinematics and linear blend skinning.

mod io;
mod kinematics;
mod skinning;
mod toy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, Vec3};

pub use io::{load_body, load_pose, load_shape, save_body, BodyFile};
pub(crate) use kinematics::blend;
pub use kinematics::{axis_angle_matrix, forward_kinematics, lbs, shape_body, RigidTransform, ShapedBody};
pub use skinning::{
    apply_weight_delta, init_garment_weights, laplacian_smooth_weights, ring_deviation, DEFAULT_SMOOTHING_ROUNDS,
};
pub use toy::{generate_toy_body, ToyBodyConfig};

/// Partition-of-unity tolerance on weight rows.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    pub position: [f64; 3],
}

/// Named heights on the zero-body used by automatic rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    /// Garments whose rest-state top lies below this height are held.
    pub collarbone_height: f64,
}

/// Dense per-vertex weight rows over joints, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    joints: usize,
    values: Vec<f64>,
}

impl WeightTable {
    pub fn zeros(rows: usize, joints: usize) -> Self {
        Self {
            joints,
            values: vec![0.0; rows * joints],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], joints: usize) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * joints);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != joints {
                return Err(Error::InvalidWeights {
                    vertex: i,
                    reason: format!("expected {joints} entries, got {}", r.len()),
                });
            }
            values.extend_from_slice(r);
        }
        Ok(Self { joints, values })
    }

    pub fn joint_count(&self) -> usize {
        self.joints
    }

    pub fn rows(&self) -> usize {
        self.values.len().checked_div(self.joints).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.joints..(i + 1) * self.joints]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.joints..(i + 1) * self.joints]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows()).map(|i| self.row(i).to_vec()).collect()
    }

    /// Checks non-negativity and unit row sums.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.rows() {
            let r = self.row(i);
            if let Some(w) = r.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
                return Err(Error::InvalidWeights {
                    vertex: i,
                    reason: format!("entry {w} is negative or non-finite"),
                });
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(Error::InvalidWeights {
                    vertex: i,
                    reason: format!("row sums to {s}"),
                });
            }
        }
        Ok(())
    }
}

/// Garment skinning weights: nearest-body initialization plus an additive,
/// optimizable correction.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinningWeights {
    pub base: WeightTable,
    pub delta: WeightTable,
}

impl SkinningWeights {
    pub fn new(base: WeightTable) -> Self {
        let delta = WeightTable::zeros(base.rows(), base.joint_count());
        Self { base, delta }
    }
}

/// Per-joint axis-angle rotations (radians) and a root translation (m).
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub rotations: Vec<Vec3>,
    pub translation: Vec3,
}

impl Pose {
    pub fn t_pose(joints: usize) -> Self {
        Self {
            rotations: vec![Vec3::zeros(); joints],
            translation: Vec3::zeros(),
        }
    }

    pub fn is_t_pose(&self) -> bool {
        self.rotations.iter().all(|r| *r == Vec3::zeros()) && self.translation == Vec3::zeros()
    }

    /// Scales every rotation and the translation by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rotations: self.rotations.iter().map(|r| r * factor).collect(),
            translation: self.translation * factor,
        }
    }

    pub fn validate(&self, joints: usize) -> Result<()> {
        if self.rotations.len() != joints {
            return Err(Error::invalid(format!(
                "pose has {} rotations for {joints} joints",
                self.rotations.len()
            )));
        }
        let finite = self
            .rotations
            .iter()
            .chain(std::iter::once(&self.translation))
            .all(|r| r.iter().all(|c| c.is_finite()));
        if !finite {
            return Err(Error::invalid("pose contains non-finite values"));
        }
        Ok(())
    }
}

/// Shape coefficients, one per shape direction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShapeParams(pub Vec<f64>);

impl ShapeParams {
    pub fn zeros(count: usize) -> Self {
        Self(vec![0.0; count])
    }
}

/// Template mesh at mean shape in T-pose plus everything needed to shape
/// and pose it.
#[derive(Debug, Clone)]
pub struct RiggedBody {
    template: TriangleMesh,
    shape_dirs: Vec<Vec<Vec3>>,
    joints: Vec<Joint>,
    joint_shape_dirs: Vec<Vec<Vec3>>,
    weights: WeightTable,
    landmarks: Landmarks,
    exposed: Vec<bool>,
}

impl RiggedBody {
    pub fn new(
        template: TriangleMesh,
        shape_dirs: Vec<Vec<Vec3>>,
        joints: Vec<Joint>,
        joint_shape_dirs: Vec<Vec<Vec3>>,
        weights: WeightTable,
        landmarks: Landmarks,
    ) -> Result<Self> {
        let n = template.vertex_count();
        if n == 0 {
            return Err(Error::invalid("body template has no vertices"));
        }
        let roots = joints.iter().filter(|j| j.parent.is_none()).count();
        if roots != 1 {
            return Err(Error::invalid(format!(
                "body needs exactly one root joint, found {roots}"
            )));
        }
        for (i, j) in joints.iter().enumerate() {
            if let Some(p) = j.parent {
                if p >= i {
                    return Err(Error::invalid(format!(
                        "joint {i} ({}) has parent {p}; parents must precede children",
                        j.name
                    )));
                }
            }
        }
        if shape_dirs.len() != joint_shape_dirs.len() {
            return Err(Error::invalid(format!(
                "{} vertex shape directions but {} joint shape directions",
                shape_dirs.len(),
                joint_shape_dirs.len()
            )));
        }
        if shape_dirs.iter().any(|d| d.len() != n) {
            return Err(Error::invalid("shape direction length differs from vertex count"));
        }
        if joint_shape_dirs.iter().any(|d| d.len() != joints.len()) {
            return Err(Error::invalid("joint shape direction length differs from joint count"));
        }
        if weights.rows() != n || weights.joint_count() != joints.len() {
            return Err(Error::invalid(format!(
                "weight table is {}x{}, expected {n}x{}",
                weights.rows(),
                weights.joint_count(),
                joints.len()
            )));
        }
        weights.validate()?;
        let exposed = crate::geometry::exposed_vertices(&template);
        Ok(Self {
            template,
            shape_dirs,
            joints,
            joint_shape_dirs,
            weights,
            landmarks,
            exposed,
        })
    }

    pub fn template(&self) -> &TriangleMesh {
        &self.template
    }

    pub fn shape_dirs(&self) -> &[Vec<Vec3>] {
        &self.shape_dirs
    }

    pub fn joint_shape_dirs(&self) -> &[Vec<Vec3>] {
        &self.joint_shape_dirs
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn shape_count(&self) -> usize {
        self.shape_dirs.len()
    }

    pub fn weights(&self) -> &WeightTable {
        &self.weights
    }

    pub fn landmarks(&self) -> Landmarks {
        self.landmarks
    }

    /// Vertices not enclosed by another closed component of the template.
    /// Collision queries only consider these.
    pub fn exposed(&self) -> &[bool] {
        &self.exposed
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pose_flat_roundtrip() {
        let mut p = Pose::t_pose(2);
        p.rotations[1] = Vec3::new(0.1, -0.2, 0.3);
        p.translation = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(Pose::from_flat(&p.to_flat(), 2).unwrap(), p);
        assert!(Pose::from_flat(&[0.0; 5], 2).is_err());
        assert_eq!(Pose::from_flat(&[0.0; 6], 2).unwrap(), Pose::t_pose(2));
    }

    #[test]
    fn scaled_pose() {
        let mut p = Pose::t_pose(1);
        p.rotations[0] = Vec3::new(0.0, 0.0, 1.0);
        assert!((p.scaled(0.25).rotations[0].z - 0.25).abs() < 1e-15);
        assert!(p.scaled(0.0).is_t_pose());
    }
}
