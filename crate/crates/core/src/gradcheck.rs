//! Analytic-versus-finite-difference checks of every energy term on seeded
//! random fixtures.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{
    bending, collision_with, distance_with, finite_diff_grad, gravity, holding, repulsive_pairs, repulsive_with,
    strain, DistancePairs, EnergyGrad, MaterialParams, SurfaceProxy,
};
use crate::error::{Error, Result};
use crate::geometry::{rest_frames, vertex_masses, Topology, TriangleMesh, Vec3};

/// Tolerance on the worst relative gradient error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Strain,
    Bending,
    Gravity,
    Collision,
    Repulsive,
    Holding,
    MultiCollision,
    Distance,
}

impl Term {
    pub const ALL: [Term; 8] = [
        Term::Strain,
        Term::Bending,
        Term::Gravity,
        Term::Collision,
        Term::Repulsive,
        Term::Holding,
        Term::MultiCollision,
        Term::Distance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Term::Strain => "strain",
            Term::Bending => "bending",
            Term::Gravity => "gravity",
            Term::Collision => "collision",
            Term::Repulsive => "repulsive",
            Term::Holding => "holding",
            Term::MultiCollision => "multi_collision",
            Term::Distance => "distance",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Term::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown energy term `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckResult {
    pub term: Term,
    pub vertices: usize,
    /// Largest analytic gradient component.
    pub scale: f64,
    pub max_abs_error: f64,
    /// `max_abs_error / scale`.
    pub max_rel_error: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_rel_error < GRADCHECK_TOLERANCE
    }
}

/// Sheet spacing of the fixtures (m); keeps many pairs within the 0.1 m radii.
const SPACING: f64 = 0.04;

/// Rest sheet of about `size` vertices and a randomly perturbed copy.
fn sheet(size: usize, rng: &mut ChaCha8Rng) -> Result<(TriangleMesh, Vec<Vec3>)> {
    let side = ((size.max(9) as f64).sqrt().ceil() as usize).max(3);
    let mut verts = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            let jitter = SPACING * 0.15;
            verts.push(Vec3::new(
                c as f64 * SPACING + rng.gen_range(-jitter..jitter),
                0.0,
                r as f64 * SPACING + rng.gen_range(-jitter..jitter),
            ));
        }
    }
    let mut faces = Vec::new();
    for r in 0..side - 1 {
        for c in 0..side - 1 {
            let a = r * side + c;
            let (b, d, e) = (a + 1, a + side, a + side + 1);
            if (r + c) % 2 == 0 {
                faces.push([a, d, b]);
                faces.push([b, d, e]);
            } else {
                faces.push([a, d, e]);
                faces.push([a, e, b]);
            }
        }
    }
    let rest = TriangleMesh::new(verts, faces)?;
    let s = rng.gen_range(0.9..1.15);
    let deformed = rest
        .vertices()
        .iter()
        .map(|v| {
            let noise = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            v * s + noise * (0.2 * SPACING)
        })
        .collect();
    Ok((rest, deformed))
}

/// Coarse body-like reference grid below the sheet with tilted unit normals.
fn floor(rng: &mut ChaCha8Rng, extent: f64, spacing: f64) -> Result<SurfaceProxy> {
    let n = (extent / spacing).ceil() as usize + 1;
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for r in 0..n {
        for c in 0..n {
            points.push(Vec3::new(
                c as f64 * spacing,
                rng.gen_range(-0.002..0.002),
                r as f64 * spacing,
            ));
            let tilt = Vec3::new(rng.gen_range(-0.3..0.3), 1.0, rng.gen_range(-0.3..0.3));
            normals.push(tilt.normalize());
        }
    }
    SurfaceProxy::from_points(points, normals, spacing)
}

fn diagonal(x: &[Vec3]) -> f64 {
    let (lo, hi) = crate::geometry::mesh::bounds_of(x);
    (hi - lo).norm()
}

fn compare(term: Term, analytic: &EnergyGrad, fd: &[Vec3]) -> CheckResult {
    let scale = analytic.grad.iter().map(|g| g.amax()).fold(0.0, f64::max);
    let max_abs_error = analytic
        .grad
        .iter()
        .zip(fd)
        .map(|(a, f)| (a - f).amax())
        .fold(0.0, f64::max);
    let max_rel_error = if scale > 0.0 {
        max_abs_error / scale
    } else if max_abs_error == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    CheckResult {
        term,
        vertices: fd.len(),
        scale,
        max_abs_error,
        max_rel_error,
    }
}

/// Runs one term on a fixture of about `size` vertices. `step` is relative
/// to the bounding-box diagonal of the evaluated configuration.
pub fn check_term(term: Term, size: usize, seed: u64, step: f64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (term as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let params = MaterialParams::default();
    let (rest, x) = sheet(size, &mut rng)?;
    let faces = rest.faces().to_vec();
    let h = step * diagonal(&x);
    let run = |f: &dyn Fn(&[Vec3]) -> EnergyGrad, at: &[Vec3]| {
        let analytic = f(at);
        let fd = finite_diff_grad(|p| f(p).value, at, h);
        compare(term, &analytic, &fd)
    };
    let result = match term {
        Term::Strain => {
            let frames = rest_frames(&rest)?;
            run(&|p| strain(p, &faces, &frames, &params), &x)
        }
        Term::Bending => {
            let topo = Topology::new(&rest);
            let p = MaterialParams {
                bending_stiffness: 1.0,
                ..params
            };
            run(&|q| bending(q, &topo.hinges, &p), &x)
        }
        Term::Gravity => {
            let masses = vertex_masses(&rest, params.area_density)?;
            run(&|p| gravity(p, &masses, &params), &x)
        }
        Term::Collision | Term::MultiCollision => {
            let eps = if term == Term::Collision {
                params.epsilon_body
            } else {
                params.epsilon_garment
            };
            let extent = diagonal(&x);
            let proxy = floor(&mut rng, extent, 0.05)?;
            // Straddle the offset surface so roughly half the vertices are active.
            let x: Vec<Vec3> = x
                .iter()
                .map(|v| Vec3::new(v.x, eps + rng.gen_range(-0.01..0.01), v.z))
                .collect();
            let closest = proxy.closest(&x);
            run(&|p| collision_with(p, &proxy, &closest, eps), &x)
        }
        Term::Repulsive => {
            let topo = Topology::new(&rest);
            let pairs = repulsive_pairs(&x, &topo, params.repulsive_radius)?;
            run(&|p| repulsive_with(p, &pairs).expect("fixture pairs are separated"), &x)
        }
        Term::Holding => {
            let mask: Vec<bool> = (0..x.len()).map(|_| rng.gen_bool(0.3)).collect();
            run(&|p| holding(p, &mask), &x)
        }
        Term::Distance => {
            let extent = diagonal(&x);
            let body = floor(&mut rng, extent, 0.1)?;
            let inner: Vec<Vec3> = x
                .iter()
                .map(|v| Vec3::new(v.x, rng.gen_range(0.0..0.06), v.z))
                .collect();
            let outer: Vec<Vec3> = x
                .iter()
                .map(|v| Vec3::new(v.x + 0.005, rng.gen_range(0.0..0.06), v.z - 0.005))
                .collect();
            let pairs = DistancePairs::find(&inner, &outer, &body, params.distance_radius);
            let n = inner.len();
            // Differentiate with respect to both layers at once.
            let joint: Vec<Vec3> = inner.iter().chain(&outer).copied().collect();
            let f = |p: &[Vec3]| {
                let d = distance_with(&p[..n], &p[n..], &body, &pairs);
                EnergyGrad {
                    value: d.value,
                    grad: d.inner.into_iter().chain(d.outer).collect(),
                }
            };
            run(&f, &joint)
        }
    };
    Ok(result)
}

/// Default relative step.
pub const DEFAULT_STEP: f64 = 1e-6;

pub fn check_all(size: usize, seed: u64, step: f64) -> Result<Vec<CheckResult>> {
    Term::ALL.into_iter().map(|t| check_term(t, size, seed, step)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_terms_pass() {
        for size in [50, 120, 200] {
            for r in check_all(size, 11, DEFAULT_STEP).unwrap() {
                assert!(r.passed(), "{r:?}");
                assert!(r.scale > 0.0, "{r:?}");
            }
        }
    }

    #[test]
    fn gravity_is_exact() {
        let r = check_term(Term::Gravity, 50, 3, DEFAULT_STEP).unwrap();
        assert!(r.max_rel_error < 1e-10, "{r:?}");
    }

    #[test]
    fn names_round_trip() {
        for t in Term::ALL {
            assert_eq!(t.name().parse::<Term>().unwrap(), t);
        }
        assert!("nope".parse::<Term>().is_err());
    }
}
