//! One-sided cubic penalties against a reference surface sampled at its
//! vertices, and the body-distance ordering term between two layers.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{EnergyGrad, MaterialParams};
use crate::error::Result;
use crate::geometry::{mean_edge_length, vertex_normals_of, SpatialIndex, Vec3};

/// Frozen snapshot of a reference surface: vertex positions, unit normals
/// and a nearest-neighbour index over them.
#[derive(Debug, Clone)]
pub struct SurfaceProxy {
    points: Vec<Vec3>,
    normals: Vec<Vec3>,
    /// Source vertex id of each proxy point.
    ids: Vec<usize>,
    index: SpatialIndex,
}

impl SurfaceProxy {
    /// Proxy over every vertex of a mesh in the given configuration.
    pub fn from_mesh(positions: &[Vec3], faces: &[[usize; 3]]) -> Result<Self> {
        Self::from_mesh_masked(positions, faces, None)
    }

    /// Proxy over the vertices with `mask[i] == true`.
    pub fn from_mesh_masked(positions: &[Vec3], faces: &[[usize; 3]], mask: Option<&[bool]>) -> Result<Self> {
        let normals = vertex_normals_of(positions, faces)?;
        let ids: Vec<usize> = match mask {
            Some(m) => (0..positions.len()).filter(|&i| m[i]).collect(),
            None => (0..positions.len()).collect(),
        };
        let points: Vec<Vec3> = ids.iter().map(|&i| positions[i]).collect();
        let normals = ids.iter().map(|&i| normals[i]).collect();
        let cell = 2.0 * mean_edge_length(positions, faces);
        let index = SpatialIndex::build(&points, if cell > 0.0 { cell } else { 0.05 })?;
        Ok(Self {
            points,
            normals,
            ids,
            index,
        })
    }

    /// Proxy from explicit points and normals.
    pub fn from_points(points: Vec<Vec3>, normals: Vec<Vec3>, cell: f64) -> Result<Self> {
        let index = SpatialIndex::build(&points, cell)?;
        let ids = (0..points.len()).collect();
        Ok(Self {
            points,
            normals,
            ids,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> Vec3 {
        self.points[k]
    }

    pub fn normal(&self, k: usize) -> Vec3 {
        self.normals[k]
    }

    /// Source vertex id of proxy point `k`.
    pub fn source_id(&self, k: usize) -> usize {
        self.ids[k]
    }

    /// Nearest proxy point of `x`.
    pub fn nearest(&self, x: &Vec3) -> usize {
        self.index.nearest(x).0
    }

    /// Nearest proxy point of each query.
    pub fn closest(&self, queries: &[Vec3]) -> Vec<usize> {
        queries.par_iter().map(|q| self.index.nearest(q).0).collect()
    }

    /// Signed offset `(x − x_k)ᵀ n_k` of `x` from proxy point `k`.
    pub fn signed_distance(&self, k: usize, x: &Vec3) -> f64 {
        (x - self.points[k]).dot(&self.normals[k])
    }
}

/// `Σ max(ε − d, 0)³` with `d` measured against fixed closest points.
pub fn collision_with(deformed: &[Vec3], proxy: &SurfaceProxy, closest: &[usize], epsilon: f64) -> EnergyGrad {
    let mut out = EnergyGrad::zeros(deformed.len());
    for (i, x) in deformed.iter().enumerate() {
        let k = closest[i];
        let gap = epsilon - proxy.signed_distance(k, x);
        if gap > 0.0 {
            out.value += gap * gap * gap;
            out.grad[i] = proxy.normal(k) * (-3.0 * gap * gap);
        }
    }
    out
}

/// Garment-versus-body penalty with offset `epsilon_body`.
pub fn body_collision(deformed: &[Vec3], body: &SurfaceProxy, params: &MaterialParams) -> EnergyGrad {
    collision_with(deformed, body, &body.closest(deformed), params.epsilon_body)
}

/// Penalty of an upper layer against a frozen lower layer, offset
/// `epsilon_garment`. Gradient is with respect to the upper layer only.
pub fn multi_collision(upper: &[Vec3], lower: &SurfaceProxy, params: &MaterialParams) -> EnergyGrad {
    collision_with(upper, lower, &lower.closest(upper), params.epsilon_garment)
}

/// Inner/outer vertex pair sharing a closest body point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistancePair {
    pub inner: usize,
    pub outer: usize,
    /// Proxy point index on the body.
    pub body: usize,
}

/// Active ordering pairs: same closest body point and both body distances
/// below the radius.
#[derive(Debug, Clone, Default)]
pub struct DistancePairs {
    pub pairs: Vec<DistancePair>,
}

impl DistancePairs {
    pub fn find(inner: &[Vec3], outer: &[Vec3], body: &SurfaceProxy, radius: f64) -> Self {
        let ci = body.closest(inner);
        let co = body.closest(outer);
        let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (j, &k) in co.iter().enumerate() {
            if body.signed_distance(k, &outer[j]) < radius {
                buckets.entry(k).or_default().push(j);
            }
        }
        let mut pairs = Vec::new();
        for (i, &k) in ci.iter().enumerate() {
            if body.signed_distance(k, &inner[i]) >= radius {
                continue;
            }
            if let Some(js) = buckets.get(&k) {
                pairs.extend(js.iter().map(|&j| DistancePair {
                    inner: i,
                    outer: j,
                    body: k,
                }));
            }
        }
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs whose inner vertex is farther from the body than the outer one.
    pub fn violations(&self, inner: &[Vec3], outer: &[Vec3], body: &SurfaceProxy) -> usize {
        self.pairs
            .iter()
            .filter(|p| body.signed_distance(p.body, &inner[p.inner]) > body.signed_distance(p.body, &outer[p.outer]))
            .count()
    }
}

/// Energy of a two-layer term with gradients for both layers.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGrad {
    pub value: f64,
    pub inner: Vec<Vec3>,
    pub outer: Vec<Vec3>,
}

/// `Σ max(d(x_i) − d(x_j), 0)³` over frozen pairs.
pub fn distance_with(inner: &[Vec3], outer: &[Vec3], body: &SurfaceProxy, pairs: &DistancePairs) -> PairGrad {
    let mut out = PairGrad {
        value: 0.0,
        inner: vec![Vec3::zeros(); inner.len()],
        outer: vec![Vec3::zeros(); outer.len()],
    };
    for p in &pairs.pairs {
        let excess = body.signed_distance(p.body, &inner[p.inner]) - body.signed_distance(p.body, &outer[p.outer]);
        if excess > 0.0 {
            out.value += excess * excess * excess;
            let g = body.normal(p.body) * (3.0 * excess * excess);
            out.inner[p.inner] += g;
            out.outer[p.outer] -= g;
        }
    }
    out
}

pub fn distance_loss(inner: &[Vec3], outer: &[Vec3], body: &SurfaceProxy, params: &MaterialParams) -> PairGrad {
    let pairs = DistancePairs::find(inner, outer, body, params.distance_radius);
    distance_with(inner, outer, body, &pairs)
}
