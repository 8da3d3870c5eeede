//! Log-barrier repulsion between nearby non-adjacent vertices of one garment.

use rayon::prelude::*;

use super::{EnergyGrad, MaterialParams};
use crate::error::{Error, Result};
use crate::geometry::{SpatialIndex, Topology, Vec3};

/// Distance below which a pair is treated as coincident.
pub const COINCIDENT_DISTANCE: f64 = 1e-9;

/// All `(i, j)`, `i < j`, closer than `radius` and not joined by an edge.
/// Sorted lexicographically.
pub fn repulsive_pairs(positions: &[Vec3], topo: &Topology, radius: f64) -> Result<Vec<(usize, usize)>> {
    if positions.is_empty() {
        return Ok(Vec::new());
    }
    let index = SpatialIndex::build(positions, 0.5 * radius)?;
    let per_vertex: Vec<Vec<(usize, usize)>> = positions
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut near = Vec::new();
            index.for_each_within(x, radius, |j, _| {
                if j > i && !topo.is_edge(i, j) {
                    near.push((i, j));
                }
            });
            near.sort_unstable();
            near
        })
        .collect();
    let pairs: Vec<(usize, usize)> = per_vertex.into_iter().flatten().collect();
    for &(i, j) in &pairs {
        let d = (positions[i] - positions[j]).norm();
        if d < COINCIDENT_DISTANCE {
            return Err(Error::CoincidentPair { i, j, distance: d });
        }
    }
    Ok(pairs)
}

/// `Σ −ln |x_i − x_j|²` over the given pairs.
pub fn repulsive_with(deformed: &[Vec3], pairs: &[(usize, usize)]) -> Result<EnergyGrad> {
    let mut out = EnergyGrad::zeros(deformed.len());
    for &(i, j) in pairs {
        let r = deformed[i] - deformed[j];
        let d2 = r.norm_squared();
        if d2.sqrt() < COINCIDENT_DISTANCE {
            return Err(Error::CoincidentPair {
                i,
                j,
                distance: d2.sqrt(),
            });
        }
        out.value -= d2.ln();
        let g = r * (-2.0 / d2);
        out.grad[i] += g;
        out.grad[j] -= g;
    }
    Ok(out)
}

pub fn repulsive(deformed: &[Vec3], topo: &Topology, params: &MaterialParams) -> Result<EnergyGrad> {
    let pairs = repulsive_pairs(deformed, topo, params.repulsive_radius)?;
    repulsive_with(deformed, &pairs)
}
