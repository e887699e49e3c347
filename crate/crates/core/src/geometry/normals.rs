//! Normal estimation by local plane fits.

use super::{knn, Point3};
use crate::error::{Error, Result};

/// Result of [`estimate_normals`]: unit normals plus the indices where the
/// neighbourhood was too degenerate (collinear or coincident points) to fit
/// a plane and the up-vector fallback was used instead.
#[derive(Debug, Clone)]
pub struct NormalEstimate {
    pub normals: Vec<Point3>,
    pub degenerate: Vec<usize>,
}

/// Estimate per-point normals from the covariance of the `k` nearest
/// neighbours (the point itself included), oriented to face `viewpoint`.
pub fn estimate_normals(points: &[Point3], k: usize, viewpoint: Point3) -> Result<NormalEstimate> {
    if points.is_empty() {
        return Err(Error::invalid("estimate_normals: empty cloud"));
    }
    if k < 3 {
        return Err(Error::invalid("estimate_normals: need k >= 3 neighbours"));
    }
    let k = k.min(points.len());
    let mut normals = Vec::with_capacity(points.len());
    let mut degenerate = Vec::new();

    for (i, &p) in points.iter().enumerate() {
        let hits = knn(p, points, k)?;
        let mut mean = Point3::ZERO;
        for h in &hits {
            mean += points[h.index];
        }
        mean = mean / hits.len() as f64;

        // Upper triangle of the 3×3 covariance.
        let (mut xx, mut xy, mut xz, mut yy, mut yz, mut zz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for h in &hits {
            let d = points[h.index] - mean;
            xx += d.x * d.x;
            xy += d.x * d.y;
            xz += d.x * d.z;
            yy += d.y * d.y;
            yz += d.y * d.z;
            zz += d.z * d.z;
        }
        let cov = [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]];
        let (eigvals, eigvecs) = jacobi_eigen_3x3(cov);

        // Ascending eigenvalues: a healthy surface patch has one small and
        // two clearly larger values.  Two vanishing directions mean the
        // neighbourhood is a line or a point.
        let scale = eigvals[2].abs().max(1e-300);
        let is_degenerate = eigvals[1] <= 1e-9 * scale || eigvals[2] <= 0.0;
        let mut n = if is_degenerate {
            degenerate.push(i);
            Point3::UP
        } else {
            eigvecs[0]
        };

        if n.dot(viewpoint - p) < 0.0 {
            n = -n;
        }
        normals.push(n);
    }
    Ok(NormalEstimate { normals, degenerate })
}

/// Cyclic Jacobi rotations for a symmetric 3×3 matrix.
///
/// Returns eigenvalues ascending with matching unit eigenvectors.
fn jacobi_eigen_3x3(m: [[f64; 3]; 3]) -> ([f64; 3], [Point3; 3]) {
    let mut a = m;
    // Eigenvector accumulator, starts as identity.
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    for _sweep in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off < 1e-15 * (a[0][0].abs() + a[1][1].abs() + a[2][2].abs()).max(1e-300) {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // A ← Jᵀ A J on rows/cols p,q.
            for r in 0..3 {
                let arp = a[r][p];
                let arq = a[r][q];
                a[r][p] = c * arp - s * arq;
                a[r][q] = s * arp + c * arq;
            }
            for col in 0..3 {
                let apc = a[p][col];
                let aqc = a[q][col];
                a[p][col] = c * apc - s * aqc;
                a[q][col] = s * apc + c * aqc;
            }
            for r in 0..3 {
                let vrp = v[r][p];
                let vrq = v[r][q];
                v[r][p] = c * vrp - s * vrq;
                v[r][q] = s * vrp + c * vrq;
            }
        }
    }

    let mut pairs: Vec<(f64, Point3)> = (0..3)
        .map(|i| (a[i][i], Point3::new(v[0][i], v[1][i], v[2][i])))
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    (
        [pairs[0].0, pairs[1].0, pairs[2].0],
        [pairs[0].1, pairs[1].1, pairs[2].1],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn eigen_recovers_diagonal() {
        let (vals, _) = jacobi_eigen_3x3([[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        assert!((vals[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_satisfies_definition() {
        let mut rng = rng_from_seed(2);
        for _ in 0..20 {
            let b: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // Symmetrise a random matrix.
            let m = [
                [b[0], (b[1] + b[3]) / 2.0, (b[2] + b[6]) / 2.0],
                [(b[1] + b[3]) / 2.0, b[4], (b[5] + b[7]) / 2.0],
                [(b[2] + b[6]) / 2.0, (b[5] + b[7]) / 2.0, b[8]],
            ];
            let (vals, vecs) = jacobi_eigen_3x3(m);
            for i in 0..3 {
                let x = vecs[i];
                let mx = Point3::new(
                    m[0][0] * x.x + m[0][1] * x.y + m[0][2] * x.z,
                    m[1][0] * x.x + m[1][1] * x.y + m[1][2] * x.z,
                    m[2][0] * x.x + m[2][1] * x.y + m[2][2] * x.z,
                );
                assert!((mx - x * vals[i]).norm() < 1e-9, "Av = λv violated");
            }
        }
    }

    #[test]
    fn flat_patch_normals_point_up() {
        let mut rng = rng_from_seed(3);
        let pts: Vec<Point3> = (0..200)
            .map(|_| Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0))
            .collect();
        let est = estimate_normals(&pts, 12, Point3::new(0.0, 0.0, 5.0)).unwrap();
        assert!(est.degenerate.is_empty());
        for n in &est.normals {
            assert!(n.z > 0.999, "normal {n:?} should be ~+z");
        }
    }

    #[test]
    fn orientation_flips_with_viewpoint() {
        let mut rng = rng_from_seed(4);
        let pts: Vec<Point3> = (0..100)
            .map(|_| Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0))
            .collect();
        let above = estimate_normals(&pts, 10, Point3::new(0.0, 0.0, 3.0)).unwrap();
        let below = estimate_normals(&pts, 10, Point3::new(0.0, 0.0, -3.0)).unwrap();
        for (a, b) in above.normals.iter().zip(below.normals.iter()) {
            assert!(a.dot(*b) < 0.0, "viewpoint flip must reverse normals");
        }
    }

    #[test]
    fn collinear_cloud_flagged_with_up_fallback() {
        let pts: Vec<Point3> = (0..20)
            .map(|i| Point3::new(i as f64 * 0.1, 0.0, 0.0))
            .collect();
        let est = estimate_normals(&pts, 6, Point3::new(0.0, 0.0, 4.0)).unwrap();
        assert_eq!(est.degenerate.len(), 20);
        for n in &est.normals {
            assert_eq!(*n, Point3::UP);
        }
    }
}
