//! Uniform-grid point index for nearest-neighbour and radius queries.

use super::mesh::bounds_of;
use super::Vec3;
use crate::error::{Error, Result};

const MAX_CELLS: usize = 1 << 21;

/// Immutable uniform grid over a snapshot of points.
///
/// Cells are stored densely (CSR layout) over the bounding box of the
/// points; the cell size grows if the box would need more than
/// `MAX_CELLS` cells.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Vec3>,
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    starts: Vec<u32>,
    ids: Vec<u32>,
}

impl SpatialIndex {
    pub fn build(points: &[Vec3], cell: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if !(cell > 0.0) || !cell.is_finite() {
            return Err(Error::invalid(format!("cell size must be positive, got {cell}")));
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid("spatial index points must be finite"));
        }
        let (lo, hi) = bounds_of(points);
        let extent = hi - lo;
        let mut cell = cell;
        let dims = loop {
            let d = [0, 1, 2].map(|a| (extent[a] / cell).floor() as usize + 1);
            if d[0].saturating_mul(d[1]).saturating_mul(d[2]) <= MAX_CELLS {
                break d;
            }
            cell *= 1.5;
        };
        let ncells = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0u32; ncells + 1];
        let mut keys = Vec::with_capacity(points.len());
        for p in points {
            let c = Self::cell_of(lo, cell, dims, p);
            let k = (c[2] * dims[1] + c[1]) * dims[0] + c[0];
            counts[k + 1] += 1;
            keys.push(k);
        }
        for i in 0..ncells {
            counts[i + 1] += counts[i];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut ids = vec![0u32; points.len()];
        // Ascending point order within each cell.
        for (i, &k) in keys.iter().enumerate() {
            ids[fill[k] as usize] = i as u32;
            fill[k] += 1;
        }
        Ok(Self {
            points: points.to_vec(),
            origin: lo,
            cell,
            dims,
            starts,
            ids,
        })
    }

    fn cell_of(origin: Vec3, cell: f64, dims: [usize; 3], p: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|a| {
            let c = ((p[a] - origin[a]) / cell).floor();
            if c <= 0.0 {
                0
            } else {
                (c as usize).min(dims[a] - 1)
            }
        })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    fn bucket(&self, c: [usize; 3]) -> &[u32] {
        let k = (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0];
        &self.ids[self.starts[k] as usize..self.starts[k + 1] as usize]
    }

    /// Nearest point `(id, distance)`; ties go to the lowest id.
    pub fn nearest(&self, query: &Vec3) -> (usize, f64) {
        let center = Self::cell_of(self.origin, self.cell, self.dims, query);
        let max_ring = (0..3)
            .map(|a| center[a].max(self.dims[a] - 1 - center[a]))
            .max()
            .unwrap_or(0);
        let mut best = (f64::INFINITY, u32::MAX);
        for ring in 0..=max_ring {
            self.visit_shell(center, ring, |id| {
                let d2 = (self.points[id as usize] - query).norm_squared();
                if d2 < best.0 || (d2 == best.0 && id < best.1) {
                    best = (d2, id);
                }
            });
            if best.0.sqrt() < self.unvisited_bound(query, center, ring) {
                break;
            }
        }
        (best.1 as usize, best.0.sqrt())
    }

    /// Lower bound on the distance from `q` to any point outside the cube of
    /// cells within `ring` of `c`. Unvisited points lie in the grid box
    /// beyond one of the cube's walls, so the bound includes the offset of
    /// `q` from the box along the other two axes.
    fn unvisited_bound(&self, q: &Vec3, c: [usize; 3], ring: usize) -> f64 {
        let box_gap = |a: usize| {
            let lo = self.origin[a];
            let hi = lo + self.dims[a] as f64 * self.cell;
            (lo - q[a]).max(q[a] - hi).max(0.0)
        };
        let gaps = [box_gap(0), box_gap(1), box_gap(2)];
        let mut bound2 = f64::INFINITY;
        for a in 0..3 {
            let side: f64 = (0..3).filter(|&b| b != a).map(|b| gaps[b] * gaps[b]).sum();
            if c[a] > ring {
                let wall = self.origin[a] + (c[a] - ring) as f64 * self.cell;
                let along = (q[a] - wall).max(0.0);
                bound2 = bound2.min(side + along * along);
            }
            if c[a] + ring + 1 < self.dims[a] {
                let wall = self.origin[a] + (c[a] + ring + 1) as f64 * self.cell;
                let along = (wall - q[a]).max(0.0);
                bound2 = bound2.min(side + along * along);
            }
        }
        bound2.sqrt()
    }

    fn visit_shell(&self, c: [usize; 3], ring: usize, mut f: impl FnMut(u32)) {
        if ring == 0 {
            self.bucket(c).iter().for_each(|&id| f(id));
            return;
        }
        let r = ring as isize;
        let range = |a: usize| {
            let lo = (c[a] as isize - r).max(0) as usize;
            let hi = (c[a] + ring).min(self.dims[a] - 1);
            (lo, hi)
        };
        let (x0, x1) = range(0);
        let (y0, y1) = range(1);
        let (z0, z1) = range(2);
        for z in z0..=z1 {
            let z_face = z.abs_diff(c[2]) == ring;
            for y in y0..=y1 {
                if z_face || y.abs_diff(c[1]) == ring {
                    for x in x0..=x1 {
                        self.bucket([x, y, z]).iter().for_each(|&id| f(id));
                    }
                } else {
                    if c[0] >= ring {
                        self.bucket([c[0] - ring, y, z]).iter().for_each(|&id| f(id));
                    }
                    if c[0] + ring < self.dims[0] {
                        self.bucket([c[0] + ring, y, z]).iter().for_each(|&id| f(id));
                    }
                }
            }
        }
    }

    /// Ids of all points with distance strictly below `radius`, ascending.
    pub fn within(&self, query: &Vec3, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        self.for_each_within(query, radius, |id, _| out.push(id));
        out.sort_unstable();
    }

    /// Calls `f(id, squared distance)` for every point strictly within
    /// `radius`, in storage order.
    pub fn for_each_within(&self, query: &Vec3, radius: f64, mut f: impl FnMut(usize, f64)) {
        let r2 = radius * radius;
        let lo = Self::cell_of(self.origin, self.cell, self.dims, &(query - Vec3::repeat(radius)));
        let hi = Self::cell_of(self.origin, self.cell, self.dims, &(query + Vec3::repeat(radius)));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                let row = (z * self.dims[1] + y) * self.dims[0];
                let ids = &self.ids[self.starts[row + lo[0]] as usize..self.starts[row + hi[0] + 1] as usize];
                for &id in ids {
                    let d2 = (self.points[id as usize] - query).norm_squared();
                    if d2 < r2 {
                        f(id as usize, d2);
                    }
                }
            }
        }
    }
}

/// Mean edge length over all face edges (each interior edge counted twice).
pub fn mean_edge_length(positions: &[Vec3], faces: &[[usize; 3]]) -> f64 {
    if faces.is_empty() {
        return 0.0;
    }
    let total: f64 = faces
        .iter()
        .map(|f| {
            (positions[f[1]] - positions[f[0]]).norm()
                + (positions[f[2]] - positions[f[1]]).norm()
                + (positions[f[0]] - positions[f[2]]).norm()
        })
        .sum();
    total / (3 * faces.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_scan(points: &[Vec3], q: &Vec3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d = (p - q).norm();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    #[test]
    fn single_point() {
        let idx = SpatialIndex::build(&[Vec3::new(1.0, 2.0, 3.0)], 0.5).unwrap();
        let (id, d) = idx.nearest(&Vec3::new(1.0, 2.0, 7.0));
        assert_eq!(id, 0);
        assert!((d - 4.0).abs() < 1e-15);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(SpatialIndex::build(&[], 1.0), Err(Error::EmptyPointSet)));
    }

    #[test]
    fn tie_goes_to_lower_id() {
        let pts = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)];
        let idx = SpatialIndex::build(&pts, 0.3).unwrap();
        assert_eq!(idx.nearest(&Vec3::zeros()).0, 0);
        let rev = [Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)];
        let idx = SpatialIndex::build(&rev, 0.3).unwrap();
        assert_eq!(idx.nearest(&Vec3::zeros()).0, 0);
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Vec3> = (0..1000)
            .map(|_| Vec3::new(rng.gen(), rng.gen::<f64>() * 2.0, rng.gen::<f64>() * 0.5))
            .collect();
        for cell in [0.03, 0.1, 0.5, 3.0] {
            let idx = SpatialIndex::build(&pts, cell).unwrap();
            for _ in 0..100 {
                // Queries inside and well outside the bounding box.
                let q = Vec3::new(
                    rng.gen_range(-1.0..2.0),
                    rng.gen_range(-1.0..3.0),
                    rng.gen_range(-1.0..1.5),
                );
                let (id, d) = idx.nearest(&q);
                let (bid, bd) = linear_scan(&pts, &q);
                assert_eq!(id, bid);
                assert_eq!(d, bd);
            }
        }
    }

    #[test]
    fn radius_query_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec3> = (0..500).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen())).collect();
        let idx = SpatialIndex::build(&pts, 0.1).unwrap();
        let mut out = Vec::new();
        for q in pts.iter().take(50) {
            idx.within(q, 0.15, &mut out);
            let expected: Vec<usize> = (0..pts.len())
                .filter(|&i| (pts[i] - q).norm_squared() < 0.15 * 0.15)
                .collect();
            assert_eq!(out, expected);
        }
    }
}
