use super::drape::{minimize, Evaluation, SolveStats, StageRun};
use super::{anchor_in, Adam, Blends, BodyFrame, LayerStack, SolverConfig};
use crate::body::{Pose, RiggedBody, ShapeParams};
use crate::energy::{multi_loss, GarmentEval, LossWeights};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Jointly minimizes the layered objective over every garment's `Δx_m` at
/// the target pose. `Δx_s` and skinning weights stay frozen. A single
/// garment has no cross terms and is returned unchanged.
pub fn untangle(
    stack: &mut LayerStack,
    body: &RiggedBody,
    beta: &ShapeParams,
    pose: &Pose,
    weights: &LossWeights,
    config: &SolverConfig,
) -> Result<SolveStats> {
    if stack.is_empty() {
        return Err(Error::invalid("cannot untangle an empty layer stack"));
    }
    config.validate()?;
    weights.validate()?;
    for g in &stack.garments {
        g.check_state()?;
    }
    let frame = BodyFrame::new(body, beta, pose)?;
    let blends: Vec<Blends> = stack
        .garments
        .iter()
        .map(|g| Blends::new(&g.weights(), &frame.transforms))
        .collect();
    let anchors: Vec<Vec<Vec3>> = stack
        .garments
        .iter()
        .map(|g| anchor_in(g, &Blends::new(&g.skin.base, &frame.transforms)))
        .collect();
    let offsets: Vec<usize> = stack
        .garments
        .iter()
        .scan(0, |acc, g| {
            let start = *acc;
            *acc += 3 * g.vertex_count();
            Some(start)
        })
        .collect();
    let total = 3 * stack.garments.iter().map(|g| g.vertex_count()).sum::<usize>();
    let mut x: Vec<f64> = stack
        .garments
        .iter()
        .flat_map(|g| g.delta_multi.iter().flat_map(|d| [d.x, d.y, d.z]))
        .collect();

    let label = stack
        .garments
        .iter()
        .map(|g| g.name.as_str())
        .collect::<Vec<_>>()
        .join("+");
    let iterations = if stack.len() == 1 {
        0
    } else {
        config.untangle_iterations
    };
    let run = StageRun {
        phase: "untangle",
        label: &label,
        stage: 1,
        iterations,
    };
    let mut adam = Adam::uniform(total, config.learning_rate);
    let garments = &stack.garments;
    let (stats, eval) = minimize(&mut x, &mut adam, config, &run, |vars| {
        let posed: Vec<Vec<Vec3>> = garments
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let canonical: Vec<Vec3> = g
                    .rest
                    .vertices()
                    .iter()
                    .zip(&g.delta_single)
                    .enumerate()
                    .map(|(i, (p, s))| {
                        let o = offsets[k] + 3 * i;
                        p + s + Vec3::new(vars[o], vars[o + 1], vars[o + 2])
                    })
                    .collect();
                blends[k].apply(&canonical)
            })
            .collect();
        let evals: Vec<GarmentEval> = garments
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
        let m = multi_loss(&evals, &frame.proxy, weights)?;
        let grad = m
            .grads
            .iter()
            .zip(&blends)
            .flat_map(|(gp, b)| b.pull_back(gp))
            .flat_map(|d| [d.x, d.y, d.z])
            .collect();
        Ok(Evaluation {
            value: m.value,
            monitor: m.smooth_value,
            grad,
            terms: m.terms,
        })
    })?;
    for (k, g) in stack.garments.iter_mut().enumerate() {
        for (i, d) in g.delta_multi.iter_mut().enumerate() {
            let o = offsets[k] + 3 * i;
            *d = Vec3::new(x[o], x[o + 1], x[o + 2]);
        }
    }
    Ok(SolveStats {
        stages: vec![stats],
        objective: eval.value,
        terms: eval.terms,
    })
}
