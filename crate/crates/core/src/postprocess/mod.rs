//! Penetration repair between layers and against the body, plus the
//! diagnostics reported after a solve.

mod metrics;
mod penetration;

pub use metrics::{self_collision_metric, self_collision_pairs, self_collision_threshold, strain_ratio_table};
pub use penetration::{
    detect_order_violations, detect_penetrations, resolve_penetrations, OrderViolation, PenetrationRecord, PosedLayer,
    Reference, Resolution, ResolveConfig,
};

use crate::body::{Pose, RiggedBody, ShapeParams};
use crate::error::Result;
use crate::geometry::Vec3;
use crate::solver::{posed_in, Blends, BodyFrame, LayerStack};

/// Posed layers of a stack, innermost first.
pub fn posed_layers(stack: &LayerStack, frame: &BodyFrame) -> Vec<PosedLayer> {
    stack
        .garments
        .iter()
        .map(|g| PosedLayer {
            positions: posed_in(g, frame),
            faces: g.rest.faces().to_vec(),
            material: g.material,
        })
        .collect()
}

/// Records of a stack at the given shape and pose.
pub fn detect_stack(
    stack: &LayerStack,
    body: &RiggedBody,
    beta: &ShapeParams,
    pose: &Pose,
) -> Result<Vec<PenetrationRecord>> {
    let frame = BodyFrame::new(body, beta, pose)?;
    detect_penetrations(&posed_layers(stack, &frame), &frame.proxy)
}

/// Resolves penetrations of a stack in posed space and folds the
/// corrections back into each garment's `Δx_m` through its blended
/// transforms.
pub fn resolve_stack(
    stack: &mut LayerStack,
    body: &RiggedBody,
    beta: &ShapeParams,
    pose: &Pose,
    config: &ResolveConfig,
) -> Result<Resolution> {
    let frame = BodyFrame::new(body, beta, pose)?;
    let before = posed_layers(stack, &frame);
    let mut layers = before.clone();
    let resolution = resolve_penetrations(&mut layers, &frame.proxy, config)?;
    for ((g, old), new) in stack.garments.iter_mut().zip(&before).zip(&layers) {
        if old.positions == new.positions {
            continue;
        }
        let offset: Vec<Vec3> = new.positions.iter().zip(&old.positions).map(|(n, o)| n - o).collect();
        let canonical = Blends::new(&g.weights(), &frame.transforms).push_back(&offset)?;
        for (d, c) in g.delta_multi.iter_mut().zip(canonical) {
            *d += c;
        }
    }
    Ok(resolution)
}
