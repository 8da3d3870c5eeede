//! Weighted single-garment and layered objectives.

use super::{
    bending, body_collision, distance_loss, gravity, holding, holding_mask, multi_collision, repulsive_pairs,
    repulsive_with, strain, EnergyGrad, LossWeights, MaterialParams, SurfaceProxy, TermEnergies,
};
use crate::error::Result;
use crate::geometry::{rest_frames, vertex_masses, RestFrame, Topology, TriangleMesh, Vec3};

/// Quantities derived once from a garment's rest mesh.
#[derive(Debug, Clone)]
pub struct RestState {
    pub faces: Vec<[usize; 3]>,
    pub frames: RestFrame,
    pub topo: Topology,
    pub masses: Vec<f64>,
    pub mask: Vec<bool>,
}

impl RestState {
    pub fn new(rest: &TriangleMesh, material: &MaterialParams) -> Result<Self> {
        Ok(Self {
            faces: rest.faces().to_vec(),
            frames: rest_frames(rest)?,
            topo: Topology::new(rest),
            masses: vertex_masses(rest, material.area_density)?,
            mask: holding_mask(rest),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.masses.len()
    }
}

/// One garment's current configuration as seen by the objective.
#[derive(Debug, Clone, Copy)]
pub struct GarmentEval<'a> {
    /// Posed positions.
    pub positions: &'a [Vec3],
    pub rest: &'a RestState,
    /// Reference positions the holding displacement is measured from.
    pub anchor: &'a [Vec3],
    pub held: bool,
    pub material: &'a MaterialParams,
}

#[derive(Debug, Clone)]
pub struct LossEval {
    /// Weighted objective and its gradient with respect to posed positions.
    pub energy: EnergyGrad,
    pub terms: TermEnergies,
    /// The objective without the `−ln r²` each active repulsion pair adds
    /// at the cutoff. Same gradient, but continuous as pairs enter or leave
    /// the radius, which makes it the better progress measure.
    pub smooth_value: f64,
}

/// `λ_s L_s + λ_b L_b + λ_g L_g + λ_c L_c + λ_r L_r (+ λ_h L_h if held)`.
pub fn single_loss(g: &GarmentEval, body: &SurfaceProxy, weights: &LossWeights) -> Result<LossEval> {
    let x = g.positions;
    let s = strain(x, &g.rest.faces, &g.rest.frames, g.material);
    let b = bending(x, &g.rest.topo.hinges, g.material);
    let gr = gravity(x, &g.rest.masses, g.material);
    let c = body_collision(x, body, g.material);
    let pairs = repulsive_pairs(x, &g.rest.topo, g.material.repulsive_radius)?;
    let r = repulsive_with(x, &pairs)?;
    let cutoff = -(g.material.repulsive_radius * g.material.repulsive_radius).ln() * pairs.len() as f64;
    let h = if g.held {
        let disp: Vec<Vec3> = x.iter().zip(g.anchor).map(|(p, a)| p - a).collect();
        holding(&disp, &g.rest.mask)
    } else {
        EnergyGrad::zeros(x.len())
    };
    let mut energy = EnergyGrad::zeros(x.len());
    energy.add_scaled(weights.strain, &s);
    energy.add_scaled(weights.bending, &b);
    energy.add_scaled(weights.gravity, &gr);
    energy.add_scaled(weights.collision, &c);
    energy.add_scaled(weights.repulsive, &r);
    energy.add_scaled(weights.holding, &h);
    let terms = TermEnergies {
        strain: s.value,
        bending: b.value,
        gravity: gr.value,
        collision_gb: c.value,
        repulsive: r.value,
        holding: h.value,
        ..Default::default()
    };
    let smooth_value = energy.value - weights.repulsive * cutoff;
    Ok(LossEval {
        energy,
        terms,
        smooth_value,
    })
}

#[derive(Debug, Clone)]
pub struct MultiEval {
    pub value: f64,
    /// See [`LossEval::smooth_value`].
    pub smooth_value: f64,
    /// Gradient per garment with respect to its posed positions.
    pub grads: Vec<Vec<Vec3>>,
    /// Per-garment terms; a pairwise term is booked on the outer garment.
    pub terms: Vec<TermEnergies>,
}

/// Sum of single losses plus `λ_mc L_mc + λ_d L_d` over all pairs `i < j`,
/// `i` the inner garment.
///
/// The multi-collision gradient flows to the outer garment only; the inner
/// surface acts as a frozen obstacle within one evaluation. The distance
/// term differentiates both layers.
pub fn multi_loss(stack: &[GarmentEval], body: &SurfaceProxy, weights: &LossWeights) -> Result<MultiEval> {
    let mut value = 0.0;
    let mut smooth_value = 0.0;
    let mut grads = Vec::with_capacity(stack.len());
    let mut terms = Vec::with_capacity(stack.len());
    for g in stack {
        let e = single_loss(g, body, weights)?;
        value += e.energy.value;
        smooth_value += e.smooth_value;
        grads.push(e.energy.grad);
        terms.push(e.terms);
    }
    for i in 0..stack.len() {
        if i + 1 == stack.len() {
            break;
        }
        let lower = SurfaceProxy::from_mesh(stack[i].positions, &stack[i].rest.faces)?;
        for j in i + 1..stack.len() {
            let upper = &stack[j];
            let mc = multi_collision(upper.positions, &lower, upper.material);
            let d = distance_loss(stack[i].positions, upper.positions, body, upper.material);
            let pair = weights.multi_collision * mc.value + weights.distance * d.value;
            value += pair;
            smooth_value += pair;
            terms[j].collision_gg += mc.value;
            terms[j].distance += d.value;
            for (acc, gm) in grads[j].iter_mut().zip(&mc.grad) {
                *acc += gm * weights.multi_collision;
            }
            for (acc, gd) in grads[j].iter_mut().zip(&d.outer) {
                *acc += gd * weights.distance;
            }
            for (acc, gd) in grads[i].iter_mut().zip(&d.inner) {
                *acc += gd * weights.distance;
            }
        }
    }
    Ok(MultiEval {
        value,
        smooth_value,
        grads,
        terms,
    })
}
