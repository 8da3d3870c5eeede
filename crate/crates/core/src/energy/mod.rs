//! Loss terms with analytic gradients with respect to deformed vertex
//! positions.
//!
//! Nearest-neighbour correspondences, pair sets and masks are inputs to the
//! `*_with` kernels so that a gradient evaluation sees them as constants.
//! The convenience wrappers recompute them from the current configuration.

mod bending;
mod combined;
mod contact;
mod fd;
mod params;
mod repulsive;
mod simple;
mod strain;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

pub use bending::{bending, bending_with_angles};
pub use combined::{multi_loss, single_loss, GarmentEval, LossEval, MultiEval, RestState};
pub use contact::{
    body_collision, collision_with, distance_loss, distance_with, multi_collision, DistancePair, DistancePairs,
    PairGrad, SurfaceProxy,
};
pub use fd::finite_diff_grad;
pub use params::{LossWeights, MaterialParams};
pub use repulsive::{repulsive, repulsive_pairs, repulsive_with};
pub use simple::{gravity, holding, holding_mask};
pub use strain::strain;

/// Scalar energy and its gradient, one 3-vector per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrad {
    pub value: f64,
    pub grad: Vec<Vec3>,
}

impl EnergyGrad {
    pub fn zeros(n: usize) -> Self {
        Self {
            value: 0.0,
            grad: vec![Vec3::zeros(); n],
        }
    }

    /// `self += weight * other`.
    pub fn add_scaled(&mut self, weight: f64, other: &EnergyGrad) {
        self.value += weight * other.value;
        for (g, o) in self.grad.iter_mut().zip(&other.grad) {
            *g += o * weight;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(|g| g.iter().all(|c| c.is_finite()))
    }
}

/// Unweighted per-term energies of one garment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TermEnergies {
    pub strain: f64,
    pub bending: f64,
    pub gravity: f64,
    pub collision_gb: f64,
    pub repulsive: f64,
    pub holding: f64,
    pub collision_gg: f64,
    pub distance: f64,
}

impl TermEnergies {
    pub const NAMES: [&'static str; 8] = [
        "strain",
        "bending",
        "gravity",
        "collision_gb",
        "repulsive",
        "holding",
        "collision_gg",
        "distance",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.strain,
            self.bending,
            self.gravity,
            self.collision_gb,
            self.repulsive,
            self.holding,
            self.collision_gg,
            self.distance,
        ]
    }

    /// Weighted objective these terms represent.
    pub fn weighted(&self, w: &LossWeights) -> f64 {
        w.strain * self.strain
            + w.bending * self.bending
            + w.gravity * self.gravity
            + w.collision * self.collision_gb
            + w.repulsive * self.repulsive
            + w.holding * self.holding
            + w.multi_collision * self.collision_gg
            + w.distance * self.distance
    }
}
