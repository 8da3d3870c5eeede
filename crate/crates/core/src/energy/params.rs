use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cloth material and contact parameters (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialParams {
    /// First Lamé constant (Pa).
    pub lame_lambda: f64,
    /// Second Lamé constant / shear modulus (Pa).
    pub lame_mu: f64,
    pub bending_stiffness: f64,
    /// kg/m².
    pub area_density: f64,
    /// Triangle volume = rest area × thickness (m).
    pub thickness: f64,
    /// Collision offset against the body (m).
    pub epsilon_body: f64,
    /// Collision offset between garment layers (m).
    pub epsilon_garment: f64,
    /// Repulsion pair radius (m).
    pub repulsive_radius: f64,
    /// Body-distance threshold for layer ordering pairs (m).
    pub distance_radius: f64,
    /// m/s²; `y` is up.
    pub gravity: [f64; 3],
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            lame_lambda: 4.44e4,
            lame_mu: 2.36e4,
            bending_stiffness: 5e-3,
            area_density: 0.15,
            thickness: 3e-4,
            epsilon_body: 0.004,
            epsilon_garment: 0.002,
            repulsive_radius: 0.1,
            distance_radius: 0.1,
            gravity: [0.0, -9.81, 0.0],
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lame_lambda", self.lame_lambda),
            ("lame_mu", self.lame_mu),
            ("bending_stiffness", self.bending_stiffness),
            ("area_density", self.area_density),
            ("thickness", self.thickness),
            ("epsilon_body", self.epsilon_body),
            ("epsilon_garment", self.epsilon_garment),
            ("repulsive_radius", self.repulsive_radius),
            ("distance_radius", self.distance_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("material {name} must be positive, got {v}")));
            }
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid("gravity must be finite"));
        }
        Ok(())
    }
}

/// Weights of the combined single- and multi-garment objectives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub strain: f64,
    pub bending: f64,
    pub gravity: f64,
    pub collision: f64,
    pub repulsive: f64,
    pub holding: f64,
    pub multi_collision: f64,
    pub distance: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            strain: 1.0,
            bending: 5.0,
            gravity: 1.0,
            collision: 250.0,
            repulsive: 0.001,
            holding: 100.0,
            multi_collision: 250.0,
            distance: 25000.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.strain,
            self.bending,
            self.gravity,
            self.collision,
            self.repulsive,
            self.holding,
            self.multi_collision,
            self.distance,
        ];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("loss weights must be non-negative and finite"));
        }
        Ok(())
    }
}
