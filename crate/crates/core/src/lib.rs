//! Quasi-static layered garment draping.
//!
//! Garments are triangle meshes dressed onto a rigged parametric body by
//! minimizing physics-based energies directly: membrane strain, dihedral
//! bending, gravity, cubic body/garment collision penalties, a log-barrier
//! repulsion against self-contact, and a holding term for bottom garments.
//! Layered outfits are untangled by a second minimization that adds
//! inter-layer collision and body-distance ordering penalties.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: meshes, OBJ I/O, rest frames, normals, dihedral angles and
//!   a uniform-grid nearest-neighbour index.
//! - [`body`]: the rigged body, forward kinematics, linear blend skinning and
//!   garment skinning-weight initialization.
//! - [`energy`]: every loss term with an analytic gradient, plus a
//!   central-difference oracle.
//! - [`solver`]: the clipped Adam optimizer, pose continuation, single-garment
//!   draping and multi-layer untangling.
//! - [`postprocess`]: penetration detection/resolution and diagnostics.
//! - [`report`]: the structured run report and its text tables.
//! - [`gradcheck`]: analytic-versus-numeric gradient checks per term.
//! - [`garments`]: procedural garment meshes used by fixtures and the CLI.

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod energy;
pub mod error;
pub mod garments;
pub mod geometry;
pub mod gradcheck;
pub mod postprocess;
pub mod report;
pub mod solver;

pub use body::{Pose, RiggedBody, ShapeParams, SkinningWeights};
pub use energy::{EnergyGrad, LossWeights, MaterialParams, TermEnergies};
pub use error::{Error, Result};
pub use geometry::{TriangleMesh, Vec3};
pub use postprocess::{PenetrationRecord, ResolveConfig};
pub use report::{EnergyReport, GarmentReport};
pub use solver::{Garment, LayerStack, SolverConfig};
