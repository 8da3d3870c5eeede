use crate::geometry::Vec3;

/// Central-difference gradient of `f` at `x`, one coordinate at a time.
pub fn finite_diff_grad<F>(mut f: F, x: &[Vec3], h: f64) -> Vec<Vec3>
where
    F: FnMut(&[Vec3]) -> f64,
{
    let mut probe = x.to_vec();
    let mut grad = vec![Vec3::zeros(); x.len()];
    for i in 0..x.len() {
        for c in 0..3 {
            let orig = probe[i][c];
            probe[i][c] = orig + h;
            let plus = f(&probe);
            probe[i][c] = orig - h;
            let minus = f(&probe);
            probe[i][c] = orig;
            grad[i][c] = (plus - minus) / (2.0 * h);
        }
    }
    grad
}
