use super::{mesh::bounds_of, TriangleMesh, Vec3};

/// Marks vertices that are not enclosed by a different connected component.
///
/// Bodies assembled from overlapping closed parts (limbs, torso) have
/// vertices buried inside neighbouring parts; those must never act as the
/// "closest body vertex" of a garment point. Enclosure is decided by the
/// generalized winding number of the other component.
pub fn exposed_vertices(mesh: &TriangleMesh) -> Vec<bool> {
    let n = mesh.vertex_count();
    let comp = components(n, mesh.faces());
    let count = comp.iter().copied().max().map_or(0, |m| m + 1);
    if count <= 1 {
        return vec![true; n];
    }
    let mut faces_of: Vec<Vec<[usize; 3]>> = vec![Vec::new(); count];
    for f in mesh.faces() {
        faces_of[comp[f[0]]].push(*f);
    }
    let mut verts_of: Vec<Vec<Vec3>> = vec![Vec::new(); count];
    for (i, v) in mesh.vertices().iter().enumerate() {
        verts_of[comp[i]].push(*v);
    }
    let boxes: Vec<(Vec3, Vec3)> = verts_of.iter().map(|v| bounds_of(v)).collect();
    let p = mesh.vertices();
    (0..n)
        .map(|i| {
            let q = p[i];
            !(0..count).any(|c| {
                if c == comp[i] || faces_of[c].is_empty() {
                    return false;
                }
                let (lo, hi) = boxes[c];
                if (0..3).any(|a| q[a] < lo[a] || q[a] > hi[a]) {
                    return false;
                }
                winding_number(p, &faces_of[c], &q) > 0.5
            })
        })
        .collect()
}

fn components(n: usize, faces: &[[usize; 3]]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for f in faces {
        for k in 1..3 {
            let (a, b) = (find(&mut parent, f[0]), find(&mut parent, f[k]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            label[r]
        })
        .collect()
}

/// Generalized winding number of a closed, outward-oriented triangle set.
pub(crate) fn winding_number(positions: &[Vec3], faces: &[[usize; 3]], q: &Vec3) -> f64 {
    let mut total = 0.0;
    for f in faces {
        let a = positions[f[0]] - q;
        let b = positions[f[1]] - q;
        let c = positions[f[2]] - q;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
        total += 2.0 * num.atan2(den);
    }
    total / (4.0 * std::f64::consts::PI)
}
