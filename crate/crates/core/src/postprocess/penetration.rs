//! Detection and geometric repair of vertices that sit closer than the
//! collision offset to the body or to a lower garment layer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{DistancePairs, MaterialParams, SurfaceProxy};
use crate::error::{Error, Result};
use crate::geometry::{Topology, Vec3};

/// Surface a vertex is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Body,
    /// Layer index (0 = innermost).
    Garment(usize),
}

/// A vertex whose signed offset from its reference is below the
/// reference's collision offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenetrationRecord {
    pub garment: usize,
    pub vertex: usize,
    pub reference: Reference,
    /// Signed offset from the nearest reference vertex along its normal (m).
    pub depth: f64,
}

impl PenetrationRecord {
    fn key(&self) -> (usize, usize, Reference) {
        (self.garment, self.vertex, self.reference)
    }
}

/// Matched pair (same nearest body point, both within the distance radius)
/// whose inner vertex is farther from the body than the outer one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderViolation {
    pub inner_garment: usize,
    pub inner_vertex: usize,
    pub outer_garment: usize,
    pub outer_vertex: usize,
    /// Inner body distance minus outer body distance (m), positive.
    pub excess: f64,
}

/// One garment layer in its posed configuration.
#[derive(Debug, Clone)]
pub struct PosedLayer {
    pub positions: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub material: MaterialParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolveConfig {
    /// Maximum number of passes.
    pub passes: usize,
    /// Displacement smoothing rounds over the 1-ring of moved vertices.
    pub relax_rounds: usize,
}

impl Default for ResolveConfig {
    fn default() -> Self {
        Self {
            passes: 10,
            relax_rounds: 3,
        }
    }
}

/// Outcome of [`resolve_penetrations`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Records left after the last pass.
    pub residuals: Vec<PenetrationRecord>,
    /// Ordering violations left after the last pass.
    pub order_residuals: Vec<OrderViolation>,
    /// Record count before the first pass and after every accepted pass.
    pub counts: Vec<usize>,
    /// Ordering violation count, aligned with `counts`.
    pub order_counts: Vec<usize>,
    /// Largest displacement of any vertex within one pass (m).
    pub max_step: f64,
}

impl Resolution {
    pub fn passes(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }
}

/// Clearance enforced between ordered partners (m).
const ORDER_MARGIN: f64 = 1e-7;

struct Hit {
    record: PenetrationRecord,
    /// Proxy point of the reference surface.
    point: usize,
}

fn epsilon_of(material: &MaterialParams, reference: Reference) -> f64 {
    match reference {
        Reference::Body => material.epsilon_body,
        Reference::Garment(_) => material.epsilon_garment,
    }
}

/// Hits of layer `g` against the body and every lower proxy. Garment
/// references only count when the nearest reference vertex lies within the
/// layer's distance radius.
fn layer_hits(g: usize, layer: &PosedLayer, body: &SurfaceProxy, lower: &[SurfaceProxy]) -> Vec<Hit> {
    let mut refs: Vec<(Reference, &SurfaceProxy)> = vec![(Reference::Body, body)];
    refs.extend(lower.iter().enumerate().map(|(j, p)| (Reference::Garment(j), p)));
    let material = &layer.material;
    let per_vertex: Vec<Vec<Hit>> = layer
        .positions
        .par_iter()
        .enumerate()
        .map(|(v, x)| {
            let mut hits = Vec::new();
            for &(reference, proxy) in &refs {
                if proxy.is_empty() {
                    continue;
                }
                let k = proxy.nearest(x);
                if let Reference::Garment(_) = reference {
                    if (x - proxy.point(k)).norm() >= material.distance_radius {
                        continue;
                    }
                }
                let depth = proxy.signed_distance(k, x);
                if depth < epsilon_of(material, reference) {
                    hits.push(Hit {
                        record: PenetrationRecord {
                            garment: g,
                            vertex: v,
                            reference,
                            depth,
                        },
                        point: k,
                    });
                }
            }
            hits
        })
        .collect();
    per_vertex.into_iter().flatten().collect()
}

fn proxies(layers: &[PosedLayer]) -> Result<Vec<SurfaceProxy>> {
    layers
        .iter()
        .map(|l| SurfaceProxy::from_mesh(&l.positions, &l.faces))
        .collect()
}

/// All records, ordered by `(garment, vertex, reference)`. Layer `g` is
/// tested against the body with `epsilon_body` and against every layer
/// below it with `epsilon_garment`, both taken from layer `g`'s material.
pub fn detect_penetrations(layers: &[PosedLayer], body: &SurfaceProxy) -> Result<Vec<PenetrationRecord>> {
    check_layers(layers)?;
    let lower = proxies(layers)?;
    let mut out: Vec<PenetrationRecord> = layers
        .iter()
        .enumerate()
        .flat_map(|(g, layer)| layer_hits(g, layer, body, &lower[..g]))
        .map(|h| h.record)
        .collect();
    out.sort_by_key(|a| a.key());
    Ok(out)
}

/// Ordering violations between every pair of layers, using the outer
/// layer's distance radius. Ordered by `(outer, inner)` garment and vertex.
pub fn detect_order_violations(layers: &[PosedLayer], body: &SurfaceProxy) -> Result<Vec<OrderViolation>> {
    check_layers(layers)?;
    let mut out = Vec::new();
    for (g, outer) in layers.iter().enumerate() {
        for (j, inner) in layers[..g].iter().enumerate() {
            let pairs = DistancePairs::find(&inner.positions, &outer.positions, body, outer.material.distance_radius);
            for p in &pairs.pairs {
                let excess = body.signed_distance(p.body, &inner.positions[p.inner])
                    - body.signed_distance(p.body, &outer.positions[p.outer]);
                if excess > 0.0 {
                    out.push(OrderViolation {
                        inner_garment: j,
                        inner_vertex: p.inner,
                        outer_garment: g,
                        outer_vertex: p.outer,
                        excess,
                    });
                }
            }
        }
    }
    out.sort_by_key(|v| (v.outer_garment, v.outer_vertex, v.inner_garment, v.inner_vertex));
    Ok(out)
}

/// Moves offending vertices out along the reference normal to just past
/// the offset, innermost layer first, and lifts outer vertices of violated
/// ordering pairs along the body normal to their inner partner's body
/// distance. The displacement is then smoothed over the 1-ring of moved
/// vertices. A vertex moves at most one collision offset per pass, so deep
/// interlocks show up as residuals. Passes that would raise the record
/// count or the combined record and violation count are rejected.
pub fn resolve_penetrations(
    layers: &mut [PosedLayer],
    body: &SurfaceProxy,
    config: &ResolveConfig,
) -> Result<Resolution> {
    let topos: Vec<Topology> = layers
        .iter()
        .map(|l| Topology::from_faces(l.positions.len(), &l.faces))
        .collect();
    let audit = |layers: &[PosedLayer]| -> Result<(usize, usize)> {
        Ok((
            detect_penetrations(layers, body)?.len(),
            detect_order_violations(layers, body)?.len(),
        ))
    };
    let (mut count, mut order) = audit(layers)?;
    let mut counts = vec![count];
    let mut order_counts = vec![order];
    let mut max_step: f64 = 0.0;
    for _ in 0..config.passes {
        if count + order == 0 {
            break;
        }
        let mut accepted = None;
        for rounds in [config.relax_rounds, 0] {
            let mut trial = layers.to_vec();
            let step = run_pass(&mut trial, &topos, body, rounds)?;
            let (c, o) = audit(&trial)?;
            if c <= count && c + o <= count + order {
                accepted = Some((trial, step, c, o));
                break;
            }
            if rounds == 0 {
                break;
            }
        }
        let Some((trial, step, c, o)) = accepted else {
            break;
        };
        layers.clone_from_slice(&trial);
        max_step = max_step.max(step);
        count = c;
        order = o;
        counts.push(count);
        order_counts.push(order);
        if step == 0.0 {
            break;
        }
    }
    Ok(Resolution {
        residuals: detect_penetrations(layers, body)?,
        order_residuals: detect_order_violations(layers, body)?,
        counts,
        order_counts,
        max_step,
    })
}

/// One pass over all layers; returns the largest vertex displacement.
fn run_pass(layers: &mut [PosedLayer], topos: &[Topology], body: &SurfaceProxy, relax_rounds: usize) -> Result<f64> {
    let mut max_step: f64 = 0.0;
    for g in 0..layers.len() {
        let lower = proxies(&layers[..g])?;
        let hits = layer_hits(g, &layers[g], body, &lower);
        let n = layers[g].positions.len();
        let mut target = layers[g].positions.clone();
        let mut cap = vec![0.0f64; n];
        for h in &hits {
            let v = h.record.vertex;
            let proxy = match h.record.reference {
                Reference::Body => body,
                Reference::Garment(j) => &lower[j],
            };
            let eps = epsilon_of(&layers[g].material, h.record.reference);
            cap[v] = cap[v].max(eps);
            let d = proxy.signed_distance(h.point, &target[v]);
            let goal = eps * (1.0 + 1e-6);
            if d < goal {
                target[v] += proxy.normal(h.point) * (goal - d);
            }
        }
        let material = layers[g].material;
        for inner in &layers[..g] {
            let pairs = DistancePairs::find(&inner.positions, &target, body, material.distance_radius);
            let mut pairs = pairs.pairs;
            pairs.sort_by_key(|p| (p.outer, p.inner));
            for p in &pairs {
                let want = body.signed_distance(p.body, &inner.positions[p.inner]) + ORDER_MARGIN;
                let have = body.signed_distance(p.body, &target[p.outer]);
                if have < want {
                    target[p.outer] += body.normal(p.body) * (want - have);
                    cap[p.outer] = cap[p.outer].max(material.epsilon_garment);
                }
            }
        }
        let layer = &mut layers[g];
        let mut delta = vec![Vec3::zeros(); n];
        let mut moved = vec![false; n];
        for v in 0..n {
            let mut step = target[v] - layer.positions[v];
            let len = step.norm();
            if len == 0.0 {
                continue;
            }
            if len > cap[v] {
                step *= cap[v] / len;
            }
            delta[v] = step;
            moved[v] = true;
        }
        relax(&mut delta, &moved, &topos[g], relax_rounds);
        for (x, d) in layer.positions.iter_mut().zip(&delta) {
            *x += d;
            max_step = max_step.max(d.norm());
        }
    }
    Ok(max_step)
}

/// Jacobi smoothing of the displacement field on the 1-ring of moved
/// vertices; moved vertices keep their own displacement.
fn relax(delta: &mut [Vec3], moved: &[bool], topo: &Topology, rounds: usize) {
    if rounds == 0 {
        return;
    }
    let mut ring: Vec<usize> = (0..delta.len())
        .filter(|&u| !moved[u] && topo.neighbors[u].iter().any(|&w| moved[w]))
        .collect();
    ring.sort_unstable();
    for _ in 0..rounds {
        let updates: Vec<Vec3> = ring
            .iter()
            .map(|&u| {
                let nbrs = &topo.neighbors[u];
                let mean = nbrs.iter().map(|&w| delta[w]).sum::<Vec3>() / nbrs.len() as f64;
                delta[u] + (mean - delta[u]) * 0.5
            })
            .collect();
        for (&u, d) in ring.iter().zip(updates) {
            delta[u] = d;
        }
    }
}

fn check_layers(layers: &[PosedLayer]) -> Result<()> {
    for (g, l) in layers.iter().enumerate() {
        if l.positions.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid(format!("layer {g} has non-finite positions")));
        }
    }
    Ok(())
}
