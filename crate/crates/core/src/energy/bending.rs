//! Dihedral-angle bending energy `Σ_edges k_b/2 α²`.

use rayon::prelude::*;

use super::{EnergyGrad, MaterialParams};
use crate::geometry::{dihedral_angle, Hinge, Vec3};

pub fn bending(deformed: &[Vec3], hinges: &[Hinge], params: &MaterialParams) -> EnergyGrad {
    bending_with_angles(deformed, hinges, params).0
}

/// Energy plus the signed angle of every hinge.
pub fn bending_with_angles(deformed: &[Vec3], hinges: &[Hinge], params: &MaterialParams) -> (EnergyGrad, Vec<f64>) {
    let kb = params.bending_stiffness;
    let per_hinge: Vec<(f64, [Vec3; 4])> = hinges
        .par_iter()
        .map(|h| {
            let (x0, x1, xa, xb) = (deformed[h.v0], deformed[h.v1], deformed[h.va], deformed[h.vb]);
            let alpha = dihedral_angle(&x0, &x1, &xa, &xb);
            let g = angle_gradient(&x0, &x1, &xa, &xb);
            (alpha, g.map(|gi| gi * (kb * alpha)))
        })
        .collect();
    let mut out = EnergyGrad::zeros(deformed.len());
    let mut angles = Vec::with_capacity(hinges.len());
    for (h, (alpha, g)) in hinges.iter().zip(per_hinge) {
        out.value += 0.5 * kb * alpha * alpha;
        for (v, gi) in [h.v0, h.v1, h.va, h.vb].into_iter().zip(g) {
            out.grad[v] += gi;
        }
        angles.push(alpha);
    }
    (out, angles)
}

/// Gradient of [`dihedral_angle`] with respect to `(x0, x1, xa, xb)`.
fn angle_gradient(x0: &Vec3, x1: &Vec3, xa: &Vec3, xb: &Vec3) -> [Vec3; 4] {
    let e = x1 - x0;
    let len = e.norm();
    let na = e.cross(&(xa - x0));
    let nb = (xb - x0).cross(&e);
    let (na2, nb2) = (na.norm_squared(), nb.norm_squared());
    let ga = na * (-len / na2);
    let gb = nb * (-len / nb2);
    // Projections of the opposite vertices onto the edge, as fractions.
    let ta = (xa - x0).dot(&e) / (len * len);
    let tb = (xb - x0).dot(&e) / (len * len);
    let g1 = -(ga * ta + gb * tb);
    let g0 = -(ga * (1.0 - ta) + gb * (1.0 - tb));
    [g0, g1, ga, gb]
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::geometry::Topology;

    /// Two triangles sharing edge (0, 1); vertex 3 folded by `fold`.
    fn hinge(fold: f64) -> (Vec<Vec3>, Vec<Hinge>) {
        let v = vec![
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 1.0, 0.0),
            Vec3::new(0.5, -fold.cos(), fold.sin()),
        ];
        let topo = Topology::from_faces(4, &[[0, 1, 2], [1, 0, 3]]);
        (v, topo.hinges)
    }

    #[test]
    fn flat_is_zero() {
        let (v, h) = hinge(0.0);
        let e = bending(&v, &h, &MaterialParams::default());
        assert!(e.value.abs() < 1e-24);
    }

    #[test]
    fn right_angle_fold() {
        let p = MaterialParams {
            bending_stiffness: 0.01,
            ..Default::default()
        };
        let (v, h) = hinge(FRAC_PI_2);
        let e = bending(&v, &h, &p);
        let expected = 0.005 * FRAC_PI_2 * FRAC_PI_2;
        assert!((e.value - expected).abs() <= 1e-9 * expected);
        assert!((e.value - 0.012337).abs() < 1e-6);
    }

    #[test]
    fn folds_add() {
        let p = MaterialParams::default();
        let (v, h) = hinge(0.4);
        let one = bending(&v, &h, &p).value;
        let two = bending(&v, &[h[0], h[0]], &p).value;
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn gradient_sums_to_zero() {
        let (v, h) = hinge(1.1);
        let e = bending(&v, &h, &MaterialParams::default());
        let sum: Vec3 = e.grad.iter().sum();
        assert!(sum.norm() < 1e-12);
    }
}
