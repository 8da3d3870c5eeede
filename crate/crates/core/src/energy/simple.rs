use super::{EnergyGrad, MaterialParams};
use crate::geometry::{TriangleMesh, Vec3};

/// Potential energy `Σ −m gᵀx`.
pub fn gravity(deformed: &[Vec3], masses: &[f64], params: &MaterialParams) -> EnergyGrad {
    let g = Vec3::from(params.gravity);
    let mut out = EnergyGrad::zeros(deformed.len());
    for ((x, m), gr) in deformed.iter().zip(masses).zip(out.grad.iter_mut()) {
        out.value -= m * g.dot(x);
        *gr = -g * *m;
    }
    out
}

/// `Σ H_i (Δy_i)²` over displacement vectors.
pub fn holding(displacements: &[Vec3], mask: &[bool]) -> EnergyGrad {
    let mut out = EnergyGrad::zeros(displacements.len());
    for ((d, &held), gr) in displacements.iter().zip(mask).zip(out.grad.iter_mut()) {
        if held {
            out.value += d.y * d.y;
            gr.y = 2.0 * d.y;
        }
    }
    out
}

/// Flags the `ceil(N / 10)` highest rest vertices; ties go to lower indices.
pub fn holding_mask(rest: &TriangleMesh) -> Vec<bool> {
    let v = rest.vertices();
    let n = v.len();
    let count = n.div_ceil(10);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[b].y.total_cmp(&v[a].y).then(a.cmp(&b)));
    let mut mask = vec![false; n];
    for &i in order.iter().take(count) {
        mask[i] = true;
    }
    mask
}
