use std::collections::BTreeMap;

use super::{TriangleMesh, Vec3};

/// Interior edge `v0 -> v1` with the opposite vertices of its two faces.
/// `v0 -> v1` follows the winding of face `fa`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hinge {
    pub v0: usize,
    pub v1: usize,
    pub va: usize,
    pub vb: usize,
    pub fa: usize,
    pub fb: usize,
}

/// Edge connectivity derived once from a mesh.
#[derive(Debug, Clone)]
pub struct Topology {
    /// Unique undirected edges, `(min, max)`, sorted.
    pub edges: Vec<[usize; 2]>,
    /// Edges shared by exactly two faces.
    pub hinges: Vec<Hinge>,
    /// Edges shared by more than two faces.
    pub non_manifold: Vec<[usize; 2]>,
    /// Sorted 1-ring neighbours per vertex.
    pub neighbors: Vec<Vec<usize>>,
}

impl Topology {
    pub fn new(mesh: &TriangleMesh) -> Self {
        Self::from_faces(mesh.vertex_count(), mesh.faces())
    }

    pub fn from_faces(vertex_count: usize, faces: &[[usize; 3]]) -> Self {
        // (min, max) -> list of (face, directed v0, v1, opposite)
        let mut incident: BTreeMap<(usize, usize), Vec<(usize, usize, usize, usize)>> = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b, o) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                incident.entry((a.min(b), a.max(b))).or_default().push((fi, a, b, o));
            }
        }
        let mut edges = Vec::with_capacity(incident.len());
        let mut hinges = Vec::new();
        let mut non_manifold = Vec::new();
        let mut neighbors = vec![Vec::new(); vertex_count];
        for (&(a, b), inc) in &incident {
            edges.push([a, b]);
            neighbors[a].push(b);
            neighbors[b].push(a);
            match inc.len() {
                1 => {}
                2 => {
                    let (fa, v0, v1, va) = inc[0];
                    let (fb, _, _, vb) = inc[1];
                    hinges.push(Hinge { v0, v1, va, vb, fa, fb });
                }
                _ => non_manifold.push([a, b]),
            }
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        Self {
            edges,
            hinges,
            non_manifold,
            neighbors,
        }
    }

    pub fn is_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors.get(i).is_some_and(|n| n.binary_search(&j).is_ok())
    }

    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }
}

/// Signed angle between the normals of faces `(v0, v1, va)` and
/// `(v1, v0, vb)`, measured about the edge direction `v1 - v0`.
///
/// Zero for coplanar faces, in `[-π, π]`, and negated when the two opposite
/// vertices swap roles.
pub fn dihedral_angle(x0: &Vec3, x1: &Vec3, xa: &Vec3, xb: &Vec3) -> f64 {
    let e = x1 - x0;
    let na = e.cross(&(xa - x0));
    let nb = (xb - x0).cross(&e);
    let sin = na.cross(&nb).dot(&e) / e.norm();
    let cos = na.dot(&nb);
    sin.atan2(cos)
}

/// Per-hinge signed dihedral angles plus the edges that could not be
/// evaluated because more than two faces meet there.
#[derive(Debug, Clone)]
pub struct Dihedrals {
    pub angles: Vec<(Hinge, f64)>,
    pub non_manifold: Vec<[usize; 2]>,
}

pub fn dihedral_angles(mesh: &TriangleMesh) -> Dihedrals {
    let topo = Topology::new(mesh);
    let p = mesh.vertices();
    let angles = topo
        .hinges
        .iter()
        .map(|h| (*h, dihedral_angle(&p[h.v0], &p[h.v1], &p[h.va], &p[h.vb])))
        .collect();
    Dihedrals {
        angles,
        non_manifold: topo.non_manifold,
    }
}
