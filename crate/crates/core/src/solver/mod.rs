//! Quasi-static draping by first-order minimization: single-garment draping
//! over a pose continuation, then joint untangling of a layer stack.

mod adam;
mod drape;
mod untangle;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{
    apply_weight_delta, forward_kinematics, init_garment_weights, lbs, shape_body, Pose, RiggedBody, RigidTransform,
    ShapeParams, SkinningWeights, WeightTable, DEFAULT_SMOOTHING_ROUNDS,
};
use crate::energy::{multi_loss, GarmentEval, LossWeights, MaterialParams, MultiEval, RestState, SurfaceProxy};
use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, Vec3};

pub use adam::{optimizer_step, Adam};
pub use drape::{drape_single, SolveStats, StageStats};
pub use untangle::untangle;

/// Optimizer and continuation settings shared by both phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Iterations per pose stage of single-garment draping.
    pub iterations: usize,
    /// Iterations of multi-layer untangling.
    pub untangle_iterations: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Global gradient norm limit.
    pub clip_norm: f64,
    /// Pose continuation stages from T-pose to the target pose.
    pub stages: usize,
    /// Stop a stage when the objective improved by less than this fraction
    /// over the last `window` iterations.
    pub tolerance: f64,
    pub window: usize,
    /// Learning rate of skinning-weight deltas relative to displacements.
    pub weight_lr_ratio: f64,
    pub optimize_weights: bool,
    /// When a window passes without enough improvement, the learning rate is
    /// multiplied by this factor; the stage ends once it would fall below
    /// `min_lr_fraction` of the initial rate. `1.0` ends the stage at the
    /// first stalled window.
    pub plateau_factor: f64,
    pub min_lr_fraction: f64,
    /// Iterations between progress lines; 0 disables them.
    pub log_interval: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            untangle_iterations: 1500,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            clip_norm: 1.0,
            stages: 5,
            tolerance: 1e-6,
            window: 100,
            weight_lr_ratio: 0.01,
            optimize_weights: true,
            plateau_factor: 0.5,
            min_lr_fraction: 0.01,
            log_interval: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("solver {name} must be positive, got {v}")))
            }
        };
        pos("learning_rate", self.learning_rate)?;
        pos("clip_norm", self.clip_norm)?;
        pos("weight_lr_ratio", self.weight_lr_ratio)?;
        pos("min_lr_fraction", self.min_lr_fraction)?;
        if !(self.plateau_factor > 0.0 && self.plateau_factor <= 1.0) {
            return Err(Error::invalid("plateau_factor must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("moment decay rates must lie in [0, 1)"));
        }
        if self.stages == 0 || self.window == 0 {
            return Err(Error::invalid("stages and window must be at least 1"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// A garment with its canonical-space optimization state.
#[derive(Debug, Clone)]
pub struct Garment {
    pub name: String,
    /// Rest mesh aligned to the zero-body.
    pub rest: TriangleMesh,
    pub material: MaterialParams,
    /// Whether the holding term applies.
    pub held: bool,
    pub skin: SkinningWeights,
    /// Displacement from single draping.
    pub delta_single: Vec<Vec3>,
    /// Displacement from untangling.
    pub delta_multi: Vec<Vec3>,
    state: RestState,
}

impl Garment {
    /// Initializes skinning weights from the body and applies the automatic
    /// held rule unless `held` overrides it.
    pub fn new(
        name: impl Into<String>,
        rest: TriangleMesh,
        material: MaterialParams,
        body: &RiggedBody,
        held: Option<bool>,
    ) -> Result<Self> {
        let skin = init_garment_weights(&rest, body, DEFAULT_SMOOTHING_ROUNDS)?;
        let held = held.unwrap_or_else(|| auto_held(&rest, body));
        Self::with_weights(name, rest, material, held, skin)
    }

    pub fn with_weights(
        name: impl Into<String>,
        rest: TriangleMesh,
        material: MaterialParams,
        held: bool,
        skin: SkinningWeights,
    ) -> Result<Self> {
        material.validate()?;
        if skin.base.rows() != rest.vertex_count() {
            return Err(Error::invalid("skinning weights do not match the garment"));
        }
        skin.base.validate()?;
        let state = RestState::new(&rest, &material)?;
        let n = rest.vertex_count();
        Ok(Self {
            name: name.into(),
            rest,
            material,
            held,
            skin,
            delta_single: vec![Vec3::zeros(); n],
            delta_multi: vec![Vec3::zeros(); n],
            state,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.rest.vertex_count()
    }

    pub fn rest_state(&self) -> &RestState {
        &self.state
    }

    /// `x + Δx_s + Δx_m`.
    pub fn canonical(&self) -> Vec<Vec3> {
        self.rest
            .vertices()
            .iter()
            .zip(&self.delta_single)
            .zip(&self.delta_multi)
            .map(|((x, s), m)| x + s + m)
            .collect()
    }

    /// Effective skinning weights `project(base + delta)`.
    pub fn weights(&self) -> WeightTable {
        apply_weight_delta(&self.skin)
    }

    fn check_state(&self) -> Result<()> {
        let n = self.vertex_count();
        if self.delta_single.len() != n || self.delta_multi.len() != n {
            return Err(Error::invalid(format!(
                "garment {}: displacement fields have the wrong length",
                self.name
            )));
        }
        let finite = self
            .delta_single
            .iter()
            .chain(&self.delta_multi)
            .all(|d| d.iter().all(|c| c.is_finite()));
        if !finite {
            return Err(Error::invalid(format!(
                "garment {}: non-finite displacement",
                self.name
            )));
        }
        Ok(())
    }
}

/// Held iff the rest-state top lies below the body's collarbone landmark.
pub fn auto_held(rest: &TriangleMesh, body: &RiggedBody) -> bool {
    let top = rest.vertices().iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max);
    top < body.landmarks().collarbone_height
}

/// Garments ordered innermost first.
#[derive(Debug, Clone, Default)]
pub struct LayerStack {
    pub garments: Vec<Garment>,
}

impl LayerStack {
    pub fn new(garments: Vec<Garment>) -> Self {
        Self { garments }
    }

    pub fn len(&self) -> usize {
        self.garments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.garments.is_empty()
    }
}

/// The body shaped and posed once, with its collision proxy over exposed
/// vertices.
#[derive(Debug, Clone)]
pub struct BodyFrame {
    pub pose: Pose,
    pub transforms: Vec<RigidTransform>,
    pub vertices: Vec<Vec3>,
    pub proxy: SurfaceProxy,
}

impl BodyFrame {
    pub fn new(body: &RiggedBody, beta: &ShapeParams, pose: &Pose) -> Result<Self> {
        let shaped = shape_body(body, beta)?;
        let transforms = forward_kinematics(body, &shaped.joints, pose)?;
        let vertices = lbs(&shaped.vertices, body.weights(), &transforms)?;
        let proxy = SurfaceProxy::from_mesh_masked(&vertices, body.template().faces(), Some(body.exposed()))?;
        Ok(Self {
            pose: pose.clone(),
            transforms,
            vertices,
            proxy,
        })
    }
}

/// Per-vertex blended transforms `p ↦ p + A p + b`.
#[derive(Debug, Clone)]
pub(crate) struct Blends {
    a: Vec<Matrix3<f64>>,
    b: Vec<Vec3>,
}

impl Blends {
    pub(crate) fn new(weights: &WeightTable, transforms: &[RigidTransform]) -> Self {
        let (a, b) = (0..weights.rows())
            .into_par_iter()
            .map(|i| crate::body::blend(weights.row(i), transforms))
            .unzip();
        Self { a, b }
    }

    pub(crate) fn apply(&self, points: &[Vec3]) -> Vec<Vec3> {
        points
            .iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(p, (a, b))| p + a * p + b)
            .collect()
    }

    /// Gradient with respect to the canonical points from one with respect
    /// to the posed points: `(I + A)ᵀ g`.
    pub(crate) fn pull_back(&self, grad: &[Vec3]) -> Vec<Vec3> {
        grad.iter().zip(&self.a).map(|(g, a)| g + a.transpose() * g).collect()
    }

    /// Solves `(I + A) d = offset` per vertex, turning a posed-space offset
    /// into a canonical one.
    pub(crate) fn push_back(&self, offset: &[Vec3]) -> Result<Vec<Vec3>> {
        offset
            .iter()
            .zip(&self.a)
            .enumerate()
            .map(|(i, (o, a))| {
                if *o == Vec3::zeros() {
                    return Ok(*o);
                }
                (Matrix3::identity() + a)
                    .lu()
                    .solve(o)
                    .ok_or_else(|| Error::invalid(format!("blended transform of vertex {i} is singular")))
            })
            .collect()
    }
}

/// Linear ramp of `target` over `stages` stages; the last is `target`.
pub fn pose_schedule(target: &Pose, stages: usize) -> Result<Vec<Pose>> {
    if stages == 0 {
        return Err(Error::invalid("pose schedule needs at least one stage"));
    }
    Ok((1..=stages)
        .map(|k| {
            if k == stages {
                target.clone()
            } else {
                target.scaled(k as f64 / stages as f64)
            }
        })
        .collect())
}

/// `LBS(x + Δx_s + Δx_m)` with the effective weights.
pub fn posed_state(garment: &Garment, body: &RiggedBody, beta: &ShapeParams, pose: &Pose) -> Result<Vec<Vec3>> {
    garment.check_state()?;
    let frame = BodyFrame::new(body, beta, pose)?;
    Ok(posed_in(garment, &frame))
}

/// Layered objective and per-garment terms of a stack at the given shape
/// and pose. For one garment this is the single-garment objective.
pub fn stack_energies(
    stack: &LayerStack,
    body: &RiggedBody,
    beta: &ShapeParams,
    pose: &Pose,
    weights: &LossWeights,
) -> Result<MultiEval> {
    if stack.is_empty() {
        return Err(Error::invalid("cannot evaluate an empty layer stack"));
    }
    weights.validate()?;
    for g in &stack.garments {
        g.check_state()?;
    }
    let frame = BodyFrame::new(body, beta, pose)?;
    let posed: Vec<Vec<Vec3>> = stack.garments.iter().map(|g| posed_in(g, &frame)).collect();
    let anchors: Vec<Vec<Vec3>> = stack
        .garments
        .iter()
        .map(|g| anchor_in(g, &Blends::new(&g.skin.base, &frame.transforms)))
        .collect();
    let evals: Vec<GarmentEval> = stack
        .garments
        .iter()
        .enumerate()
        .map(|(k, g)| GarmentEval {
            positions: &posed[k],
            rest: g.rest_state(),
            anchor: &anchors[k],
            held: g.held,
            material: &g.material,
        })
        .collect();
    multi_loss(&evals, &frame.proxy, weights)
}

pub(crate) fn posed_in(garment: &Garment, frame: &BodyFrame) -> Vec<Vec3> {
    Blends::new(&garment.weights(), &frame.transforms).apply(&garment.canonical())
}

/// Holding reference: the rest mesh skinned with the base weights.
pub(crate) fn anchor_in(garment: &Garment, blends_base: &Blends) -> Vec<Vec3> {
    blends_base.apply(garment.rest.vertices())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{generate_toy_body, ToyBodyConfig};
    use crate::garments::TubeSpec;

    fn setup() -> (RiggedBody, Garment) {
        let body = generate_toy_body(&ToyBodyConfig::default()).unwrap();
        let spec = TubeSpec {
            segments: 24,
            rings: 8,
            ..Default::default()
        };
        let g = Garment::new("skirt", spec.mesh().unwrap(), MaterialParams::default(), &body, None).unwrap();
        (body, g)
    }

    #[test]
    fn schedule_ramps_linearly() {
        let mut target = Pose::t_pose(2);
        target.rotations[1] = Vec3::new(1.0, 0.0, 0.0);
        let s = pose_schedule(&target, 4).unwrap();
        let angles: Vec<f64> = s.iter().map(|p| p.rotations[1].x).collect();
        assert_eq!(angles, vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(pose_schedule(&target, 1).unwrap(), vec![target.clone()]);
        assert!(pose_schedule(&Pose::t_pose(2), 3).unwrap().iter().all(Pose::is_t_pose));
        assert!(pose_schedule(&target, 0).is_err());
    }

    #[test]
    fn posed_state_identities() {
        let (body, mut g) = setup();
        let beta = ShapeParams::zeros(body.shape_count());
        let t = Pose::t_pose(body.joint_count());
        assert_eq!(posed_state(&g, &body, &beta, &t).unwrap(), g.rest.vertices());

        let mut moved = t.clone();
        moved.translation = Vec3::new(0.1, -0.2, 0.3);
        let p = posed_state(&g, &body, &beta, &moved).unwrap();
        for (a, b) in p.iter().zip(g.rest.vertices()) {
            assert!((a - b - moved.translation).norm() < 1e-12);
        }

        for (i, (s, m)) in g.delta_single.iter_mut().zip(g.delta_multi.iter_mut()).enumerate() {
            *s = Vec3::new(0.001 * i as f64, -0.002, 0.0005);
            *m = Vec3::new(0.0, 0.0003 * (i % 7) as f64, -0.001);
        }
        let p = posed_state(&g, &body, &beta, &t).unwrap();
        assert_eq!(p, g.canonical());
    }

    #[test]
    fn skirt_below_collarbone_is_held() {
        let (body, g) = setup();
        assert!(g.held);
        let top = TubeSpec {
            y_top: 1.5,
            y_bottom: 1.0,
            radius_top: 0.2,
            radius_bottom: 0.2,
            ..Default::default()
        };
        assert!(!auto_held(&top.mesh().unwrap(), &body));
    }

    #[test]
    fn push_back_inverts_pull_forward() {
        let (body, g) = setup();
        let mut pose = Pose::t_pose(body.joint_count());
        pose.rotations[0] = Vec3::new(0.0, 0.4, 0.1);
        pose.rotations[10] = Vec3::new(0.5, 0.0, 0.0);
        let frame = BodyFrame::new(&body, &ShapeParams::zeros(body.shape_count()), &pose).unwrap();
        let blends = Blends::new(&g.weights(), &frame.transforms);
        let base = g.canonical();
        let offset: Vec<Vec3> = (0..base.len())
            .map(|i| Vec3::new(0.001, 0.0, -0.002 * (i % 3) as f64))
            .collect();
        let d = blends.push_back(&offset).unwrap();
        let shifted: Vec<Vec3> = base.iter().zip(&d).map(|(p, d)| p + d).collect();
        for ((a, b), o) in blends.apply(&shifted).iter().zip(blends.apply(&base)).zip(&offset) {
            assert!((a - b - o).norm() < 1e-12);
        }
    }
}
