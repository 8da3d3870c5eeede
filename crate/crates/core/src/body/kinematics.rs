use nalgebra::{Matrix3, Rotation3};
use rayon::prelude::*;

use super::{Pose, RiggedBody, ShapeParams, WeightTable};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// `p ↦ linear * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub linear: Matrix3<f64>,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            linear: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn translation(t: Vec3) -> Self {
        Self {
            linear: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation `r` about the fixed point `pivot`.
    pub fn rotation_about(r: Matrix3<f64>, pivot: Vec3) -> Self {
        Self {
            linear: r,
            translation: pivot - r * pivot,
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.linear * p + self.translation
    }

    /// `self ∘ other`.
    pub fn then_after(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            linear: self.linear * other.linear,
            translation: self.linear * other.translation + self.translation,
        }
    }
}

/// Rodrigues rotation; exactly the identity for a zero vector.
pub fn axis_angle_matrix(v: &Vec3) -> Matrix3<f64> {
    if *v == Vec3::zeros() {
        return Matrix3::identity();
    }
    Rotation3::from_scaled_axis(*v).into_inner()
}

/// Body vertices and joint positions for a shape vector (no pose
/// correctives).
#[derive(Debug, Clone)]
pub struct ShapedBody {
    pub vertices: Vec<Vec3>,
    pub joints: Vec<Vec3>,
}

pub fn shape_body(body: &RiggedBody, beta: &ShapeParams) -> Result<ShapedBody> {
    if beta.0.len() != body.shape_count() {
        return Err(Error::invalid(format!(
            "shape vector has {} coefficients, body has {} shape directions",
            beta.0.len(),
            body.shape_count()
        )));
    }
    let mut vertices = body.template().vertices().to_vec();
    let mut joints: Vec<Vec3> = body.joints().iter().map(|j| Vec3::from(j.position)).collect();
    for (k, &b) in beta.0.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        for (v, d) in vertices.iter_mut().zip(&body.shape_dirs()[k]) {
            *v += d * b;
        }
        for (j, d) in joints.iter_mut().zip(&body.joint_shape_dirs()[k]) {
            *j += d * b;
        }
    }
    Ok(ShapedBody { vertices, joints })
}

/// World transform of every joint relative to the rest pose.
pub fn forward_kinematics(body: &RiggedBody, shaped_joints: &[Vec3], pose: &Pose) -> Result<Vec<RigidTransform>> {
    pose.validate(body.joint_count())?;
    if shaped_joints.len() != body.joint_count() {
        return Err(Error::invalid("shaped joint count mismatch"));
    }
    let mut world: Vec<RigidTransform> = Vec::with_capacity(body.joint_count());
    for (i, joint) in body.joints().iter().enumerate() {
        let local = RigidTransform::rotation_about(axis_angle_matrix(&pose.rotations[i]), shaped_joints[i]);
        let parent = match joint.parent {
            Some(p) => world[p],
            None => RigidTransform::translation(pose.translation),
        };
        world.push(parent.then_after(&local));
    }
    Ok(world)
}

/// Blended transform of one weight row as `(A, b)` with the posed point
/// `p + A p + b`; `A = Σ w (R - I)` keeps identity transforms exact.
pub(crate) fn blend(row: &[f64], transforms: &[RigidTransform]) -> (Matrix3<f64>, Vec3) {
    let mut a = Matrix3::zeros();
    let mut b = Vec3::zeros();
    for (w, t) in row.iter().zip(transforms) {
        if *w == 0.0 {
            continue;
        }
        a += (t.linear - Matrix3::identity()) * *w;
        b += t.translation * *w;
    }
    (a, b)
}

/// Linear blend skinning of `points` with validated weights.
pub fn lbs(points: &[Vec3], weights: &WeightTable, transforms: &[RigidTransform]) -> Result<Vec<Vec3>> {
    if weights.rows() != points.len() || weights.joint_count() != transforms.len() {
        return Err(Error::invalid(format!(
            "weights are {}x{} for {} points and {} transforms",
            weights.rows(),
            weights.joint_count(),
            points.len(),
            transforms.len()
        )));
    }
    weights.validate()?;
    Ok(lbs_unchecked(points, weights, transforms))
}

pub(crate) fn lbs_unchecked(points: &[Vec3], weights: &WeightTable, transforms: &[RigidTransform]) -> Vec<Vec3> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let (a, b) = blend(weights.row(i), transforms);
            p + a * p + b
        })
        .collect()
}
