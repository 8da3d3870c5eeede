//! Procedural open-tube garments: skirts, sleeves of a shirt-like torso
//! wrap, and wavy layers for untangling fixtures.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, Vec3};

/// Open tube around a vertical axis, faces wound so normals point away from
/// the axis.
///
/// The radius varies linearly from `radius_top` to `radius_bottom` and is
/// modulated by `wave_amplitude · cos(wave_lobes · θ + wave_phase)`, which
/// lets two tubes with similar radii cross each other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TubeSpec {
    /// Axis position `(x, z)`.
    pub center: [f64; 2],
    pub y_top: f64,
    pub y_bottom: f64,
    pub radius_top: f64,
    pub radius_bottom: f64,
    /// Vertices around each ring.
    pub segments: usize,
    /// Number of rings, top and bottom included.
    pub rings: usize,
    pub wave_amplitude: f64,
    pub wave_lobes: u32,
    pub wave_phase: f64,
}

impl Default for TubeSpec {
    /// A straight skirt hanging from the waist of the default toy body.
    fn default() -> Self {
        Self {
            center: [0.0, 0.0],
            y_top: 1.0,
            y_bottom: 0.55,
            radius_top: 0.25,
            radius_bottom: 0.25,
            segments: 64,
            rings: 24,
            wave_amplitude: 0.0,
            wave_lobes: 0,
            wave_phase: 0.0,
        }
    }
}

impl TubeSpec {
    fn validate(&self) -> Result<()> {
        if self.segments < 3 || self.rings < 2 {
            return Err(Error::invalid("a tube needs at least 3 segments and 2 rings"));
        }
        if !(self.y_top > self.y_bottom) {
            return Err(Error::invalid("tube top must lie above its bottom"));
        }
        let min_r = self.radius_top.min(self.radius_bottom) - self.wave_amplitude.abs();
        if !(min_r > 0.0) {
            return Err(Error::invalid("tube radius must stay positive"));
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<TriangleMesh> {
        self.validate()?;
        let (n, rings) = (self.segments, self.rings);
        let mut verts = Vec::with_capacity(n * rings);
        for r in 0..rings {
            let t = r as f64 / (rings - 1) as f64;
            let y = self.y_top + t * (self.y_bottom - self.y_top);
            let base = self.radius_top + t * (self.radius_bottom - self.radius_top);
            for k in 0..n {
                // Odd rings are rotated half a segment for near-equilateral triangles.
                let theta = TAU * (k as f64 + 0.5 * (r % 2) as f64) / n as f64;
                let radius = base + self.wave_amplitude * (self.wave_lobes as f64 * theta + self.wave_phase).cos();
                verts.push(Vec3::new(
                    self.center[0] + radius * theta.cos(),
                    y,
                    self.center[1] + radius * theta.sin(),
                ));
            }
        }
        let mut faces = Vec::with_capacity(2 * n * (rings - 1));
        for r in 0..rings - 1 {
            for k in 0..n {
                let k1 = (k + 1) % n;
                let (a, b) = (r * n + k, r * n + k1);
                let (c, d) = ((r + 1) * n + k, (r + 1) * n + k1);
                if r % 2 == 0 {
                    faces.push([a, b, c]);
                    faces.push([b, d, c]);
                } else {
                    faces.push([a, d, c]);
                    faces.push([a, b, d]);
                }
            }
        }
        TriangleMesh::new(verts, faces)
    }
}

/// `count` wavy tubes of nearly equal radius, slightly narrower than the
/// toy torso, whose lobes are out of phase so every pair interpenetrates.
pub fn crossing_layers(count: usize) -> Vec<TubeSpec> {
    (0..count)
        .map(|i| TubeSpec {
            y_top: 1.33,
            y_bottom: 1.05,
            radius_top: 0.115 + 0.002 * i as f64,
            radius_bottom: 0.115 + 0.002 * i as f64,
            segments: 40,
            rings: 12,
            wave_amplitude: 0.006,
            wave_lobes: 3,
            wave_phase: TAU * i as f64 / count.max(1) as f64,
            ..TubeSpec::default()
        })
        .collect()
}
