//! Procedural capsule-limb humanoid used in place of a learned body model.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{Joint, Landmarks, RiggedBody, WeightTable};
use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, Vec3};

/// Segment lengths and radii of the toy body (meters). The body stands on
/// the `y = 0` plane, faces `+z`, arms along `±x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyBodyConfig {
    pub shin_length: f64,
    pub thigh_length: f64,
    pub hip_width: f64,
    pub pelvis_radius: f64,
    pub torso_length: f64,
    pub torso_radius: f64,
    pub head_radius: f64,
    pub shoulder_width: f64,
    pub upper_arm_length: f64,
    pub forearm_length: f64,
    pub upper_arm_radius: f64,
    pub forearm_radius: f64,
    pub thigh_radius: f64,
    pub shin_radius: f64,
    /// Vertices around each capsule.
    pub segments: usize,
    /// Target spacing of rings along capsule axes.
    pub ring_spacing: f64,
    /// Number of shape directions (2 to 4): scale, girth, leg length,
    /// shoulder width.
    pub shape_count: usize,
}

impl Default for ToyBodyConfig {
    fn default() -> Self {
        Self {
            shin_length: 0.42,
            thigh_length: 0.43,
            hip_width: 0.18,
            pelvis_radius: 0.11,
            torso_length: 0.55,
            torso_radius: 0.13,
            head_radius: 0.095,
            shoulder_width: 0.36,
            upper_arm_length: 0.29,
            forearm_length: 0.26,
            upper_arm_radius: 0.048,
            forearm_radius: 0.04,
            thigh_radius: 0.075,
            shin_radius: 0.055,
            segments: 24,
            ring_spacing: 0.025,
            shape_count: 2,
        }
    }
}

impl ToyBodyConfig {
    fn validate(&self) -> Result<()> {
        let dims = [
            ("shin_length", self.shin_length),
            ("thigh_length", self.thigh_length),
            ("hip_width", self.hip_width),
            ("pelvis_radius", self.pelvis_radius),
            ("torso_length", self.torso_length),
            ("torso_radius", self.torso_radius),
            ("head_radius", self.head_radius),
            ("shoulder_width", self.shoulder_width),
            ("upper_arm_length", self.upper_arm_length),
            ("forearm_length", self.forearm_length),
            ("upper_arm_radius", self.upper_arm_radius),
            ("forearm_radius", self.forearm_radius),
            ("thigh_radius", self.thigh_radius),
            ("shin_radius", self.shin_radius),
            ("ring_spacing", self.ring_spacing),
        ];
        for (name, v) in dims {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.segments < 6 {
            return Err(Error::invalid("at least 6 segments around each capsule"));
        }
        if !(2..=4).contains(&self.shape_count) {
            return Err(Error::invalid(format!(
                "toy body supports 2 to 4 shape directions, got {}",
                self.shape_count
            )));
        }
        Ok(())
    }
}

/// How a capsule's vertices are skinned.
enum Skin {
    /// Primary joint, blended into `parent` near the capsule start.
    Segment { joint: usize, parent: Option<usize> },
    /// Vertical gradient between two joints around height `at`.
    Vertical { lower: usize, upper: usize, at: f64 },
}

struct Capsule {
    a: Vec3,
    b: Vec3,
    radius: f64,
    skin: Skin,
    arm: bool,
}

const BLEND: f64 = 0.05;

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

pub fn generate_toy_body(cfg: &ToyBodyConfig) -> Result<RiggedBody> {
    cfg.validate()?;
    let ankle_y = cfg.shin_radius + 0.01;
    let knee_y = ankle_y + cfg.shin_length;
    let hip_y = knee_y + cfg.thigh_length;
    let spine_y = hip_y + 0.2 * cfg.torso_length / 0.55;
    let neck_y = hip_y + cfg.torso_length;
    let head_y = neck_y + 0.06 + cfg.head_radius;
    let shoulder_y = neck_y - 0.04;
    let sx = 0.5 * cfg.shoulder_width;
    let hx = 0.5 * cfg.hip_width;
    let elbow_x = sx + cfg.upper_arm_length;
    let wrist_x = elbow_x + cfg.forearm_length;

    let j = |name: &str, parent: Option<usize>, p: [f64; 3]| Joint {
        name: name.to_string(),
        parent,
        position: p,
    };
    let joints = vec![
        j("pelvis", None, [0.0, hip_y, 0.0]),
        j("spine", Some(0), [0.0, spine_y, 0.0]),
        j("neck", Some(1), [0.0, neck_y, 0.0]),
        j("head", Some(2), [0.0, head_y, 0.0]),
        j("left_shoulder", Some(1), [sx, shoulder_y, 0.0]),
        j("left_elbow", Some(4), [elbow_x, shoulder_y, 0.0]),
        j("left_wrist", Some(5), [wrist_x, shoulder_y, 0.0]),
        j("right_shoulder", Some(1), [-sx, shoulder_y, 0.0]),
        j("right_elbow", Some(7), [-elbow_x, shoulder_y, 0.0]),
        j("right_wrist", Some(8), [-wrist_x, shoulder_y, 0.0]),
        j("left_hip", Some(0), [hx, hip_y, 0.0]),
        j("left_knee", Some(10), [hx, knee_y, 0.0]),
        j("left_ankle", Some(11), [hx, ankle_y, 0.0]),
        j("right_hip", Some(0), [-hx, hip_y, 0.0]),
        j("right_knee", Some(13), [-hx, knee_y, 0.0]),
        j("right_ankle", Some(14), [-hx, ankle_y, 0.0]),
    ];
    let jp = |i: usize| Vec3::from(joints[i].position);
    let seg = |a: usize, b: usize, radius: f64, arm: bool| Capsule {
        a: jp(a),
        b: jp(b),
        radius,
        skin: Skin::Segment {
            joint: a,
            parent: joints[a].parent,
        },
        arm,
    };
    let capsules = vec![
        Capsule {
            a: jp(13),
            b: jp(10),
            radius: cfg.pelvis_radius,
            skin: Skin::Segment { joint: 0, parent: None },
            arm: false,
        },
        Capsule {
            a: Vec3::new(0.0, hip_y + 0.3 * cfg.pelvis_radius, 0.0),
            b: Vec3::new(0.0, neck_y - 0.02, 0.0),
            radius: cfg.torso_radius,
            skin: Skin::Vertical {
                lower: 0,
                upper: 1,
                at: spine_y,
            },
            arm: false,
        },
        Capsule {
            a: jp(2),
            b: Vec3::new(0.0, head_y, 0.0),
            radius: cfg.head_radius,
            skin: Skin::Segment {
                joint: 2,
                parent: Some(1),
            },
            arm: false,
        },
        seg(4, 5, cfg.upper_arm_radius, true),
        seg(5, 6, cfg.forearm_radius, true),
        seg(7, 8, cfg.upper_arm_radius, true),
        seg(8, 9, cfg.forearm_radius, true),
        seg(10, 11, cfg.thigh_radius, false),
        seg(11, 12, cfg.shin_radius, false),
        seg(13, 14, cfg.thigh_radius, false),
        seg(14, 15, cfg.shin_radius, false),
    ];

    let nj = joints.len();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut weight_rows = Vec::new();
    let mut girth = Vec::new();
    let mut arm_side = Vec::new();
    for cap in &capsules {
        let (verts, tris, axis) = capsule_mesh(cap.a, cap.b, cap.radius, cfg.segments, cfg.ring_spacing);
        let offset = vertices.len();
        faces.extend(tris.iter().map(|t| t.map(|i| i + offset)));
        for (v, (s, axis_point)) in verts.iter().zip(axis) {
            let mut row = vec![0.0; nj];
            match cap.skin {
                Skin::Segment { joint, parent: Some(p) } => {
                    let w = smoothstep((s + BLEND) / (2.0 * BLEND));
                    row[joint] += w;
                    row[p] += 1.0 - w;
                }
                Skin::Segment { joint, parent: None } => row[joint] = 1.0,
                Skin::Vertical { lower, upper, at } => {
                    let w = smoothstep((v.y - at + 1.5 * BLEND) / (3.0 * BLEND));
                    row[upper] += w;
                    row[lower] += 1.0 - w;
                }
            }
            weight_rows.push(row);
            girth.push((v - axis_point) * 0.1);
            arm_side.push(if cap.arm { v.x.signum() } else { 0.0 });
        }
        vertices.extend(verts);
    }
    let template = TriangleMesh::new(vertices, faces)?;

    let verts = template.vertices();
    let joint_pos: Vec<Vec3> = (0..nj).map(jp).collect();
    let mut shape_dirs = Vec::new();
    let mut joint_dirs = Vec::new();
    // Overall scale about the ground point under the body.
    shape_dirs.push(verts.iter().map(|v| v * 0.05).collect::<Vec<_>>());
    joint_dirs.push(joint_pos.iter().map(|p| p * 0.05).collect::<Vec<_>>());
    // Girth: radial growth about each capsule axis.
    shape_dirs.push(girth);
    joint_dirs.push(vec![Vec3::zeros(); nj]);
    if cfg.shape_count >= 3 {
        let leg = |p: &Vec3| Vec3::new(0.0, 0.05 * (p.y - hip_y).min(0.0), 0.0);
        shape_dirs.push(verts.iter().map(leg).collect());
        joint_dirs.push(joint_pos.iter().map(leg).collect());
    }
    if cfg.shape_count >= 4 {
        shape_dirs.push(arm_side.iter().map(|s| Vec3::new(0.03 * s, 0.0, 0.0)).collect());
        joint_dirs.push(
            joints
                .iter()
                .enumerate()
                .map(|(i, jt)| {
                    let is_arm = (4..=9).contains(&i);
                    Vec3::new(if is_arm { 0.03 * jt.position[0].signum() } else { 0.0 }, 0.0, 0.0)
                })
                .collect(),
        );
    }
    let weights = WeightTable::from_rows(&weight_rows, nj)?;
    RiggedBody::new(
        template,
        shape_dirs,
        joints,
        joint_dirs,
        weights,
        Landmarks {
            collarbone_height: neck_y - 0.06,
        },
    )
}

/// Closed capsule around segment `a → b`, outward-facing. Returns vertices,
/// faces, and per vertex the axial coordinate measured from `a` together
/// with the closest point on the segment.
fn capsule_mesh(
    a: Vec3,
    b: Vec3,
    r: f64,
    around: usize,
    spacing: f64,
) -> (Vec<Vec3>, Vec<[usize; 3]>, Vec<(f64, Vec3)>) {
    let len = (b - a).norm();
    let w = (b - a) / len;
    let helper = if w.y.abs() < 0.9 { Vec3::y() } else { Vec3::x() };
    let u = helper.cross(&w).normalize();
    let v = w.cross(&u);
    let n_cap = (around / 4).max(3);
    let n_len = ((len / spacing).ceil() as usize).max(1);

    // (axial position, ring radius)
    let mut rings = Vec::new();
    for k in 1..n_cap {
        let phi = -FRAC_PI_2 + k as f64 * FRAC_PI_2 / n_cap as f64;
        rings.push((r * phi.sin(), r * phi.cos()));
    }
    for k in 0..=n_len {
        rings.push((len * k as f64 / n_len as f64, r));
    }
    for k in 1..n_cap {
        let phi = k as f64 * FRAC_PI_2 / n_cap as f64;
        rings.push((len + r * phi.sin(), r * phi.cos()));
    }

    let mut verts = vec![a - w * r];
    let mut axis = vec![(-r, a)];
    for &(s, rho) in &rings {
        let center = a + w * s.clamp(0.0, len);
        for m in 0..around {
            let psi = 2.0 * PI * m as f64 / around as f64;
            verts.push(a + w * s + (u * psi.cos() + v * psi.sin()) * rho);
            axis.push((s, center));
        }
    }
    verts.push(b + w * r);
    axis.push((len + r, b));

    let ring = |k: usize, m: usize| 1 + k * around + (m % around);
    let top = verts.len() - 1;
    let mut faces = Vec::new();
    for m in 0..around {
        faces.push([0, ring(0, m + 1), ring(0, m)]);
    }
    for k in 0..rings.len() - 1 {
        for m in 0..around {
            faces.push([ring(k, m), ring(k, m + 1), ring(k + 1, m)]);
            faces.push([ring(k, m + 1), ring(k + 1, m + 1), ring(k + 1, m)]);
        }
    }
    let last = rings.len() - 1;
    for m in 0..around {
        faces.push([ring(last, m), ring(last, m + 1), top]);
    }
    (verts, faces, axis)
}
