//! Triangle meshes and the derived quantities every energy term relies on.

mod inside;
pub(crate) mod mesh;
mod obj;
mod rest;
mod spatial;
mod topology;

pub use inside::exposed_vertices;
pub use mesh::{
    face_areas_normals, face_areas_normals_of, vertex_masses, vertex_normals, vertex_normals_of, TriangleMesh,
    DEGENERATE_AREA,
};
pub use obj::{load_obj, parse_obj, save_obj, write_obj};
pub use rest::{deformation_gradient, rest_frames, RestFrame};
pub use spatial::{mean_edge_length, SpatialIndex};
pub use topology::{dihedral_angle, dihedral_angles, Dihedrals, Hinge, Topology};

pub type Vec3 = nalgebra::Vector3<f64>;
