use super::{RiggedBody, SkinningWeights, WeightTable};
use crate::error::{Error, Result};
use crate::geometry::{mean_edge_length, SpatialIndex, Topology, TriangleMesh};

pub const DEFAULT_SMOOTHING_ROUNDS: usize = 50;

/// Copies each garment vertex's weights from the nearest exposed zero-body
/// vertex, then smooths them over the garment's edge graph.
pub fn init_garment_weights(garment: &TriangleMesh, body: &RiggedBody, rounds: usize) -> Result<SkinningWeights> {
    if garment.vertex_count() == 0 {
        return Err(Error::invalid("garment has no vertices"));
    }
    let template = body.template();
    let ids: Vec<usize> = (0..template.vertex_count()).filter(|&i| body.exposed()[i]).collect();
    let points: Vec<_> = ids.iter().map(|&i| template.vertices()[i]).collect();
    let cell = 2.0 * mean_edge_length(template.vertices(), template.faces());
    let index = SpatialIndex::build(&points, if cell > 0.0 { cell } else { 0.05 })?;
    let joints = body.joint_count();
    let mut base = WeightTable::zeros(garment.vertex_count(), joints);
    for (i, v) in garment.vertices().iter().enumerate() {
        let (k, _) = index.nearest(v);
        base.row_mut(i).copy_from_slice(body.weights().row(ids[k]));
    }
    let topo = Topology::new(garment);
    laplacian_smooth_weights(&mut base, &topo, rounds);
    Ok(SkinningWeights::new(base))
}

/// Jacobi rounds of `w ← (w + mean of 1-ring) / 2`, renormalized per row.
pub fn laplacian_smooth_weights(weights: &mut WeightTable, topo: &Topology, rounds: usize) {
    let j = weights.joint_count();
    let mut next = weights.clone();
    for _ in 0..rounds {
        for (i, nbrs) in topo.neighbors.iter().enumerate() {
            if nbrs.is_empty() {
                next.row_mut(i).copy_from_slice(weights.row(i));
                continue;
            }
            let inv = 1.0 / nbrs.len() as f64;
            let out = next.row_mut(i);
            for (k, o) in out.iter_mut().enumerate() {
                let mean: f64 = nbrs.iter().map(|&n| weights.as_slice()[n * j + k]).sum::<f64>() * inv;
                *o = 0.5 * (weights.as_slice()[i * j + k] + mean);
            }
            let s: f64 = out.iter().sum();
            out.iter_mut().for_each(|w| *w /= s);
        }
        std::mem::swap(weights, &mut next);
    }
}

/// Largest L1 distance between a vertex's weights and its 1-ring mean.
pub fn ring_deviation(weights: &WeightTable, topo: &Topology) -> f64 {
    let j = weights.joint_count();
    topo.neighbors
        .iter()
        .enumerate()
        .filter(|(_, n)| !n.is_empty())
        .map(|(i, nbrs)| {
            (0..j)
                .map(|k| {
                    let mean = nbrs.iter().map(|&n| weights.row(n)[k]).sum::<f64>() / nbrs.len() as f64;
                    (weights.row(i)[k] - mean).abs()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// `project(base + delta)`: clamp negatives, renormalize; rows that clamp
/// to all zeros fall back to the base row.
pub fn apply_weight_delta(weights: &SkinningWeights) -> WeightTable {
    let mut out = weights.base.clone();
    for i in 0..out.rows() {
        let base = weights.base.row(i);
        let delta = weights.delta.row(i);
        let row = out.row_mut(i);
        let mut sum = 0.0;
        for ((o, b), d) in row.iter_mut().zip(base).zip(delta) {
            *o = (b + d).max(0.0);
            sum += *o;
        }
        if sum > 0.0 && sum.is_finite() {
            row.iter_mut().for_each(|w| *w /= sum);
        } else {
            row.copy_from_slice(base);
        }
    }
    out
}
