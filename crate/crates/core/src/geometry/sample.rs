//! Furthest point sampling.

use super::{Point3, SeedSet};
use crate::error::{Error, Result};

/// Greedy max–min subsampling of `k` indices starting from `start`.
///
/// Each round selects the point whose distance to the already-selected set
/// is largest; distance ties are broken toward the lowest index, so the
/// result is a pure function of `(points, k, start)`.
pub fn furthest_point_sample(points: &[Point3], k: usize, start: usize) -> Result<SeedSet> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("fps: k={k} out of range for {n} points")));
    }
    if start >= n {
        return Err(Error::invalid(format!("fps: start index {start} out of range for {n} points")));
    }

    let mut indices = Vec::with_capacity(k);
    let mut selected = vec![false; n];
    // Squared distance from each point to the nearest selected point.
    let mut min_d2 = vec![f64::INFINITY; n];

    let mut latest = start;
    indices.push(start);
    selected[start] = true;

    for _ in 1..k {
        let lp = points[latest];
        let mut best = usize::MAX;
        let mut best_d2 = -1.0;
        for (i, p) in points.iter().enumerate() {
            let d2 = p.dist_sq(lp);
            if d2 < min_d2[i] {
                min_d2[i] = d2;
            }
            if !selected[i] && min_d2[i] > best_d2 {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        debug_assert!(best != usize::MAX);
        indices.push(best);
        selected[best] = true;
        latest = best;
    }

    Ok(SeedSet { indices, source_len: n })
}

/// A sampling start that does not depend on point order: the index of the
/// point furthest from the centroid (lowest index on exact ties).
///
/// Seeding [`furthest_point_sample`] with this makes the selected *set* of
/// positions stable under permutations of the input, which the encoders
/// rely on for their invariance guarantees.
pub fn furthest_from_centroid(points: &[Point3]) -> usize {
    debug_assert!(!points.is_empty());
    let inv = 1.0 / points.len() as f64;
    let c = points.iter().fold(Point3::ZERO, |acc, &p| acc + p) * inv;
    let mut best = 0;
    let mut best_d2 = -1.0;
    for (i, p) in points.iter().enumerate() {
        let d2 = p.dist_sq(c);
        if d2 > best_d2 {
            best_d2 = d2;
            best = i;
        }
    }
    best
}
