//! Saint Venant–Kirchhoff membrane energy.

use nalgebra::{Matrix2, Matrix3x2};
use rayon::prelude::*;

use super::{EnergyGrad, MaterialParams};
use crate::geometry::{RestFrame, Vec3};

/// `Σ_faces (λ/2 tr(G)² + μ tr(G²)) · area · thickness` with the Green
/// strain `G = ½(FᵀF − I₂)` of the 3×2 deformation gradient `F`.
pub fn strain(deformed: &[Vec3], faces: &[[usize; 3]], rest: &RestFrame, params: &MaterialParams) -> EnergyGrad {
    let (lambda, mu) = (params.lame_lambda, params.lame_mu);
    let per_face: Vec<(f64, [Vec3; 3])> = faces
        .par_iter()
        .enumerate()
        .map(|(fi, f)| {
            let x0 = deformed[f[0]];
            let ds = Matrix3x2::from_columns(&[deformed[f[1]] - x0, deformed[f[2]] - x0]);
            let dm_inv = rest.inv_rest[fi];
            let def = ds * dm_inv;
            let green = (def.transpose() * def - Matrix2::identity()) * 0.5;
            let tr = green.trace();
            let volume = rest.areas[fi] * params.thickness;
            let psi = 0.5 * lambda * tr * tr + mu * (green * green).trace();
            // First Piola–Kirchhoff stress, then chain through F = Ds Dm⁻¹.
            let piola = def * (green * (2.0 * mu) + Matrix2::identity() * (lambda * tr));
            let h = piola * dm_inv.transpose() * volume;
            let g1: Vec3 = h.column(0).into();
            let g2: Vec3 = h.column(1).into();
            (psi * volume, [-(g1 + g2), g1, g2])
        })
        .collect();
    let mut out = EnergyGrad::zeros(deformed.len());
    for (f, (e, g)) in faces.iter().zip(per_face) {
        out.value += e;
        for k in 0..3 {
            out.grad[f[k]] += g[k];
        }
    }
    out
}
