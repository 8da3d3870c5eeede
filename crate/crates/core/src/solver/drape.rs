use log::info;
use serde::{Deserialize, Serialize};

use super::adam::{optimizer_step_scaled, Adam};
use super::{anchor_in, pose_schedule, Blends, BodyFrame, Garment, SolverConfig};
use crate::body::{apply_weight_delta, Pose, RiggedBody, RigidTransform, ShapeParams, SkinningWeights, WeightTable};
use crate::energy::{single_loss, GarmentEval, LossWeights, TermEnergies};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Progress of one pose stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub iterations: usize,
    pub initial: f64,
    pub best: f64,
    pub converged: bool,
}

/// Outcome of a solve; `terms` and `objective` are evaluated at the target
/// pose in the returned state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub stages: Vec<StageStats>,
    pub objective: f64,
    /// Per garment.
    pub terms: Vec<TermEnergies>,
}

impl SolveStats {
    pub fn iterations(&self) -> usize {
        self.stages.iter().map(|s| s.iterations).sum()
    }

    pub fn initial(&self) -> Option<f64> {
        self.stages.first().map(|s| s.initial)
    }
}

pub(crate) struct Evaluation {
    pub value: f64,
    /// Continuous progress measure with the same gradient as `value`.
    pub monitor: f64,
    pub grad: Vec<f64>,
    pub terms: Vec<TermEnergies>,
}

pub(crate) struct StageRun<'a> {
    pub phase: &'a str,
    pub label: &'a str,
    pub stage: usize,
    pub iterations: usize,
}

/// Clipped Adam with best-iterate bookkeeping. `x` holds the best iterate on
/// return; its evaluation is returned alongside the stage summary.
pub(crate) fn minimize<F>(
    x: &mut Vec<f64>,
    adam: &mut Adam,
    config: &SolverConfig,
    run: &StageRun,
    mut eval: F,
) -> Result<(StageStats, Evaluation)>
where
    F: FnMut(&[f64]) -> Result<Evaluation>,
{
    let mut history: Vec<f64> = Vec::with_capacity(run.iterations + 1);
    let mut initial = None;
    let mut best: Option<(Vec<f64>, Evaluation)> = None;
    let mut converged = false;
    let mut steps = 0;
    let mut lr_scale = 1.0;
    // Iteration at which the current learning rate took effect.
    let mut since = 0;
    for it in 0..=run.iterations {
        let e = eval(x)?;
        if !e.value.is_finite() || e.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence {
                stage: run.stage,
                iteration: it,
                reason: format!("{} objective became non-finite ({})", run.phase, e.value),
            });
        }
        initial.get_or_insert(e.value);
        // Best value since the current learning rate took effect.
        let best_so_far = if it == since {
            e.monitor
        } else {
            history[it - 1].min(e.monitor)
        };
        history.push(best_so_far);
        if config.log_interval > 0 && it % config.log_interval == 0 {
            log_progress(run, it, &e, lr_scale);
        }
        // Running minima ignore the optimizer's oscillation; a stalled window
        // shrinks the step until the floor is reached.
        if it >= since + config.window {
            let prev = history[it - config.window];
            if prev - best_so_far <= config.tolerance * best_so_far.abs() {
                let next = lr_scale * config.plateau_factor;
                if config.plateau_factor < 1.0 && next >= config.min_lr_fraction * (1.0 - 1e-12) {
                    lr_scale = next;
                    since = it;
                } else {
                    converged = true;
                }
            }
        }
        let last = it == run.iterations || converged;
        let grad = if last { Vec::new() } else { e.grad.clone() };
        if best.as_ref().is_none_or(|(_, b)| e.monitor < b.monitor) {
            best = Some((x.clone(), e));
        }
        if last {
            break;
        }
        optimizer_step_scaled(adam, x, &grad, config, lr_scale).map_err(|err| Error::Divergence {
            stage: run.stage,
            iteration: it,
            reason: err.to_string(),
        })?;
        steps += 1;
    }
    let (best_x, best_eval) = best.expect("at least one evaluation");
    *x = best_x;
    let stats = StageStats {
        iterations: steps,
        initial: initial.expect("at least one evaluation"),
        best: best_eval.value,
        converged,
    };
    info!(
        "phase={} garment={} stage={} done=1 iterations={} initial={:.9e} best={:.9e} converged={}",
        run.phase, run.label, run.stage, stats.iterations, stats.initial, stats.best, stats.converged
    );
    Ok((stats, best_eval))
}

fn log_progress(run: &StageRun, it: usize, e: &Evaluation, lr_scale: f64) {
    let mut total = TermEnergies::default();
    for t in &e.terms {
        total.strain += t.strain;
        total.bending += t.bending;
        total.gravity += t.gravity;
        total.collision_gb += t.collision_gb;
        total.repulsive += t.repulsive;
        total.holding += t.holding;
        total.collision_gg += t.collision_gg;
        total.distance += t.distance;
    }
    let terms: Vec<String> = TermEnergies::NAMES
        .iter()
        .zip(total.values())
        .map(|(n, v)| format!("{n}={v:.6e}"))
        .collect();
    info!(
        "phase={} garment={} stage={} iter={} lr_scale={} energy={:.9e} {}",
        run.phase,
        run.label,
        run.stage,
        it,
        lr_scale,
        e.value,
        terms.join(" ")
    );
}

/// Minimizes the single-garment objective over `Δx_s` and, if enabled, the
/// skinning-weight deltas, ramping the pose from T-pose to `pose`. Each
/// stage starts from the previous stage's best iterate. `Δx_m` is not
/// touched.
pub fn drape_single(
    garment: &mut Garment,
    body: &RiggedBody,
    beta: &ShapeParams,
    pose: &Pose,
    weights: &LossWeights,
    config: &SolverConfig,
) -> Result<SolveStats> {
    config.validate()?;
    weights.validate()?;
    garment.check_state()?;
    let n = garment.vertex_count();
    let joints = garment.skin.base.joint_count();
    let weight_vars = if config.optimize_weights { n * joints } else { 0 };
    let mut lr = vec![config.learning_rate; 3 * n];
    lr.resize(3 * n + weight_vars, config.learning_rate * config.weight_lr_ratio);
    let mut x = pack(&garment.delta_single, weight_vars > 0, garment.skin.delta.as_slice());

    let mut stages = Vec::with_capacity(config.stages);
    let mut last: Option<Evaluation> = None;
    let schedule = pose_schedule(pose, config.stages)?;
    for (k, stage_pose) in schedule.iter().enumerate() {
        // A converged stage is not repeated at an unchanged pose.
        if k > 0 && schedule[k - 1] == *stage_pose && stages.last().is_some_and(|s: &StageStats| s.converged) {
            let value = last.as_ref().expect("previous stage").value;
            stages.push(StageStats {
                iterations: 0,
                initial: value,
                best: value,
                converged: true,
            });
            continue;
        }
        // Fresh moments per stage.
        let mut adam = Adam::new(lr.clone());
        let frame = BodyFrame::new(body, beta, stage_pose)?;
        let identity = frame.transforms.iter().all(|t| *t == RigidTransform::identity());
        let anchor = anchor_in(garment, &Blends::new(&garment.skin.base, &frame.transforms));
        let run = StageRun {
            phase: "single",
            label: &garment.name,
            stage: k + 1,
            iterations: config.iterations,
        };
        let current: &Garment = garment;
        let (stats, eval) = minimize(&mut x, &mut adam, config, &run, |vars| {
            evaluate_single(current, vars, weight_vars > 0, identity, &frame, &anchor, weights)
        })?;
        unpack(
            &x,
            &mut garment.delta_single,
            weight_vars > 0,
            garment.skin.delta.as_mut_slice(),
        );
        stages.push(stats);
        last = Some(eval);
    }
    let eval = last.expect("at least one stage");
    Ok(SolveStats {
        stages,
        objective: eval.value,
        terms: eval.terms,
    })
}

fn pack(disp: &[Vec3], with_weights: bool, weights: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = disp.iter().flat_map(|d| [d.x, d.y, d.z]).collect();
    if with_weights {
        x.extend_from_slice(weights);
    }
    x
}

fn unpack(x: &[f64], disp: &mut [Vec3], with_weights: bool, weights: &mut [f64]) {
    for (i, d) in disp.iter_mut().enumerate() {
        *d = Vec3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
    }
    if with_weights {
        weights.copy_from_slice(&x[3 * disp.len()..]);
    }
}

fn evaluate_single(
    garment: &Garment,
    vars: &[f64],
    with_weights: bool,
    identity: bool,
    frame: &BodyFrame,
    anchor: &[Vec3],
    weights: &LossWeights,
) -> Result<Evaluation> {
    let n = garment.vertex_count();
    let mut skin = garment.skin.clone();
    let mut delta_single = vec![Vec3::zeros(); n];
    unpack(vars, &mut delta_single, with_weights, skin.delta.as_mut_slice());
    let canonical: Vec<Vec3> = garment
        .rest
        .vertices()
        .iter()
        .zip(&delta_single)
        .zip(&garment.delta_multi)
        .map(|((x, s), m)| x + s + m)
        .collect();
    let effective = apply_weight_delta(&skin);
    let blends = Blends::new(&effective, &frame.transforms);
    let posed = blends.apply(&canonical);
    let eval = single_loss(
        &GarmentEval {
            positions: &posed,
            rest: garment.rest_state(),
            anchor,
            held: garment.held,
            material: &garment.material,
        },
        &frame.proxy,
        weights,
    )?;
    let grad_posed = &eval.energy.grad;
    let mut grad: Vec<f64> = blends
        .pull_back(grad_posed)
        .iter()
        .flat_map(|d| [d.x, d.y, d.z])
        .collect();
    if with_weights {
        let joints = effective.joint_count();
        let mut gw = vec![0.0; effective.rows() * joints];
        if !identity {
            weight_gradient(&skin, &effective, &canonical, grad_posed, &frame.transforms, &mut gw);
        }
        grad.extend(gw);
    }
    Ok(Evaluation {
        value: eval.energy.value,
        monitor: eval.smooth_value,
        grad,
        terms: vec![eval.terms],
    })
}

/// Chain rule through `posed_i = Σ_j w_ij G_j(p_i)` and the clamp-and-
/// renormalize projection of `base + delta`.
fn weight_gradient(
    skin: &SkinningWeights,
    effective: &WeightTable,
    canonical: &[Vec3],
    grad_posed: &[Vec3],
    transforms: &[RigidTransform],
    out: &mut [f64],
) {
    let joints = effective.joint_count();
    let mut dw = vec![0.0; joints];
    for (i, (p, gp)) in canonical.iter().zip(grad_posed).enumerate() {
        let base = skin.base.row(i);
        let delta = skin.delta.row(i);
        let sum: f64 = base.iter().zip(delta).map(|(b, d)| (b + d).max(0.0)).sum();
        if !(sum > 0.0) {
            continue;
        }
        let w = effective.row(i);
        for (j, t) in transforms.iter().enumerate() {
            dw[j] = gp.dot(&t.apply(p));
        }
        let mean: f64 = w.iter().zip(&dw).map(|(w, d)| w * d).sum();
        for j in 0..joints {
            if base[j] + delta[j] > 0.0 {
                out[i * joints + j] = (dw[j] - mean) / sum;
            }
        }
    }
}
