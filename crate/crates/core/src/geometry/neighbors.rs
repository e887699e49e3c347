//! k-nearest-neighbour queries and inverse-distance-weighted interpolation.

use super::Point3;
use crate::error::{Error, Result};
use ndarray::ArrayView2;

/// Distance below which a query is treated as sitting exactly on a data
/// point: interpolation then short-circuits to that point's value instead
/// of dividing by a vanishing distance.
pub const IDW_ZERO_DISTANCE: f64 = 1e-8;

/// A neighbour hit: index into the searched slice plus euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist: f64,
}

/// The `t` nearest neighbours of `query`, ordered by ascending distance
/// with ties broken toward the lowest index.
pub fn knn(query: Point3, points: &[Point3], t: usize) -> Result<Vec<Neighbor>> {
    if t == 0 || t > points.len() {
        return Err(Error::invalid(format!(
            "knn: t={t} out of range for {} points",
            points.len()
        )));
    }
    let mut buf = Vec::with_capacity(t);
    knn_into(query, points, t, &mut buf);
    Ok(buf)
}

/// Allocation-free core of [`knn`]; `t` must already be valid.
///
/// Maintains a small insertion-sorted buffer keyed on squared distance.
/// Scanning indices in ascending order and displacing only on a strictly
/// smaller distance yields the lowest-index tie-break for free.
pub(crate) fn knn_into(query: Point3, points: &[Point3], t: usize, out: &mut Vec<Neighbor>) {
    debug_assert!(t >= 1 && t <= points.len());
    out.clear();
    if t > 64 {
        // Wide queries are rare; a full stable sort keeps the same
        // (distance, index) ordering contract.
        let mut order: Vec<(f64, usize)> =
            points.iter().enumerate().map(|(i, p)| (p.dist_sq(query), i)).collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        out.extend(order.iter().take(t).map(|&(d2, i)| Neighbor { index: i, dist: d2.sqrt() }));
        return;
    }
    // (dist², index) buffer, ascending.
    let mut buf: [(f64, usize); 64] = [(f64::INFINITY, usize::MAX); 64];
    let mut filled = 0usize;
    for (i, p) in points.iter().enumerate() {
        let d2 = p.dist_sq(query);
        if filled == t && d2 >= buf[t - 1].0 {
            continue;
        }
        // Insert, shifting larger entries right.
        let mut j = filled.min(t - 1);
        if filled < t {
            filled += 1;
        }
        while j > 0 && buf[j - 1].0 > d2 {
            buf[j] = buf[j - 1];
            j -= 1;
        }
        buf[j] = (d2, i);
    }
    for &(d2, i) in buf.iter().take(filled) {
        out.push(Neighbor { index: i, dist: d2.sqrt() });
    }
}

/// Interpolate per-point `values` (one row per point) at `query` using
/// inverse-distance weights `w = 1/d` over the `t` nearest neighbours.
///
/// A query within [`IDW_ZERO_DISTANCE`] of a data point returns that
/// point's row exactly (lowest index wins among coincident points).
pub fn idw_interpolate(
    query: Point3,
    points: &[Point3],
    values: ArrayView2<f64>,
    t: usize,
) -> Result<Vec<f64>> {
    if values.nrows() != points.len() {
        return Err(Error::invalid(format!(
            "idw: {} value rows for {} points",
            values.nrows(),
            points.len()
        )));
    }
    let neighbors = knn(query, points, t)?;
    let mut out = vec![0.0; values.ncols()];
    idw_combine(&neighbors, values, &mut out);
    Ok(out)
}

/// Blend rows of `values` at the given neighbours into `out`.
/// Factored out so callers that batch many queries can reuse buffers.
pub(crate) fn idw_combine(neighbors: &[Neighbor], values: ArrayView2<f64>, out: &mut [f64]) {
    debug_assert!(!neighbors.is_empty());
    out.fill(0.0);
    if neighbors[0].dist <= IDW_ZERO_DISTANCE {
        let row = values.row(neighbors[0].index);
        for (o, v) in out.iter_mut().zip(row.iter()) {
            *o = *v;
        }
        return;
    }
    let mut w_sum = 0.0;
    for nb in neighbors {
        let w = 1.0 / nb.dist;
        w_sum += w;
        let row = values.row(nb.index);
        for (o, v) in out.iter_mut().zip(row.iter()) {
            *o += w * *v;
        }
    }
    let inv = 1.0 / w_sum;
    for o in out.iter_mut() {
        *o *= inv;
    }
}
