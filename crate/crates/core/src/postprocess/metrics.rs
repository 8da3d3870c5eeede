use crate::energy::{repulsive_pairs, repulsive_with, MaterialParams};
use crate::error::{Error, Result};
use crate::geometry::{Topology, Vec3};

/// Default self-contact distance: twice the cloth thickness.
pub fn self_collision_threshold(material: &MaterialParams) -> f64 {
    2.0 * material.thickness
}

/// Non-adjacent vertex pairs closer than `threshold`.
pub fn self_collision_pairs(positions: &[Vec3], topo: &Topology, threshold: f64) -> Result<Vec<(usize, usize)>> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::invalid(format!(
            "self-collision threshold must be positive, got {threshold}"
        )));
    }
    repulsive_pairs(positions, topo, threshold)
}

/// `Σ −ln d²` over non-adjacent pairs closer than `threshold`.
pub fn self_collision_metric(positions: &[Vec3], topo: &Topology, threshold: f64) -> Result<f64> {
    let pairs = self_collision_pairs(positions, topo, threshold)?;
    Ok(repulsive_with(positions, &pairs)?.value)
}

/// Lower-triangular table: entry `[m][i]` is the strain of garment `i` in
/// the stack of the first `m + 1` garments divided by its single-drape
/// strain. Entries with zero single-drape strain are `None`.
pub fn strain_ratio_table(multi: &[Vec<f64>], single: &[f64]) -> Result<Vec<Vec<Option<f64>>>> {
    if multi.len() > single.len() {
        return Err(Error::invalid(format!(
            "{} stacks but only {} single-drape strains",
            multi.len(),
            single.len()
        )));
    }
    multi
        .iter()
        .enumerate()
        .map(|(m, row)| {
            if row.len() != m + 1 {
                return Err(Error::invalid(format!(
                    "stack {} has {} strain values, expected {}",
                    m + 1,
                    row.len(),
                    m + 1
                )));
            }
            Ok(row
                .iter()
                .zip(single)
                .map(|(s, base)| if *base == 0.0 { None } else { Some(s / base) })
                .collect())
        })
        .collect()
}
