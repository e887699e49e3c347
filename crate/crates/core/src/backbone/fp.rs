//! Feature propagation: carry features from a coarse level back onto a
//! finer one by inverse-distance interpolation, concatenate the fine level's
//! skip features and refine with an MLP.

use ndarray::{s, Array2};

use crate::error::Result;
use crate::geometry::{idw_combine, knn_into, Neighbor, Point3, IDW_ZERO_DISTANCE};
use crate::nn::{Activation, BnStats, FeatureBatch, GradStore, Mlp, MlpCache, ParamSet};
use crate::rng::SeedRng;

#[derive(Debug, Clone)]
pub struct FeaturePropagation {
    mlp: Mlp,
    t: usize,
}

pub struct FpCache {
    /// Per fine point: the coarse neighbours its interpolation used.
    neighbors: Vec<Vec<Neighbor>>,
    mlp: MlpCache,
    coarse_rows: usize,
    coarse_cols: usize,
}

impl FeaturePropagation {
    pub fn new(
        ps: &mut ParamSet,
        rng: &mut SeedRng,
        name: &str,
        plan: &[usize],
        t: usize,
    ) -> FeaturePropagation {
        let mlp = Mlp::new(ps, rng, name, plan, true, Activation::Relu, Activation::Relu);
        FeaturePropagation { mlp, t }
    }

    pub fn out_dim(&self) -> usize {
        self.mlp.out_dim()
    }

    pub fn bn_count(&self) -> usize {
        self.mlp.bn_count()
    }

    /// Interpolated coarse features side by side with the skip features.
    /// `t` is capped by the coarse point count (a global level has one).
    fn assemble(
        &self,
        coarse_pts: &[Point3],
        coarse_feat: &FeatureBatch,
        fine_pts: &[Point3],
        skip: &FeatureBatch,
    ) -> (FeatureBatch, Vec<Vec<Neighbor>>) {
        let cc = coarse_feat.ncols();
        let t = self.t.min(coarse_pts.len());
        let mut x = Array2::zeros((fine_pts.len(), cc + skip.ncols()));
        let mut neighbors = Vec::with_capacity(fine_pts.len());
        let mut nb = Vec::with_capacity(t);
        let mut blend = vec![0.0; cc];
        for (r, &p) in fine_pts.iter().enumerate() {
            knn_into(p, coarse_pts, t, &mut nb);
            idw_combine(&nb, coarse_feat.view(), &mut blend);
            for (j, v) in blend.iter().enumerate() {
                x[[r, j]] = *v;
            }
            for (j, v) in skip.row(r).iter().enumerate() {
                x[[r, cc + j]] = *v;
            }
            neighbors.push(nb.clone());
        }
        (x, neighbors)
    }

    pub fn forward_train(
        &self,
        ps: &ParamSet,
        coarse_pts: &[Point3],
        coarse_feat: &FeatureBatch,
        fine_pts: &[Point3],
        skip: &FeatureBatch,
    ) -> Result<(FeatureBatch, FpCache, Vec<BnStats>)> {
        debug_assert_eq!(coarse_pts.len(), coarse_feat.nrows());
        debug_assert_eq!(fine_pts.len(), skip.nrows());
        let (x, neighbors) = self.assemble(coarse_pts, coarse_feat, fine_pts, skip);
        let (y, mlp_cache, stats) = self.mlp.forward_train(ps, &x)?;
        let cache = FpCache {
            neighbors,
            mlp: mlp_cache,
            coarse_rows: coarse_feat.nrows(),
            coarse_cols: coarse_feat.ncols(),
        };
        Ok((y, cache, stats))
    }

    pub fn forward_eval(
        &self,
        ps: &ParamSet,
        coarse_pts: &[Point3],
        coarse_feat: &FeatureBatch,
        fine_pts: &[Point3],
        skip: &FeatureBatch,
    ) -> FeatureBatch {
        let (x, _) = self.assemble(coarse_pts, coarse_feat, fine_pts, skip);
        self.mlp.forward_eval(ps, &x)
    }

    /// Returns `(d_coarse_features, d_skip_features)`.
    pub fn backward(
        &self,
        ps: &ParamSet,
        cache: &FpCache,
        dy: &FeatureBatch,
        g: &mut GradStore,
    ) -> (FeatureBatch, FeatureBatch) {
        let dx = self.mlp.backward(ps, &cache.mlp, dy, g);
        let cc = cache.coarse_cols;
        let d_interp = dx.slice(s![.., ..cc]);
        let d_skip = dx.slice(s![.., cc..]).to_owned();
        let d_coarse = scatter_idw(&cache.neighbors, d_interp, cache.coarse_rows);
        (d_coarse, d_skip)
    }

    pub fn update_running(&self, ps: &mut ParamSet, stats: &[BnStats]) {
        self.mlp.update_running(ps, stats);
    }
}

/// Adjoint of inverse-distance interpolation: scatter each interpolated
/// row's gradient back onto its source neighbours with the same normalized
/// weights the forward blend used.
pub(crate) fn scatter_idw(
    neighbors: &[Vec<Neighbor>],
    d_interp: ndarray::ArrayView2<f64>,
    source_rows: usize,
) -> FeatureBatch {
    let mut d_src = Array2::zeros((source_rows, d_interp.ncols()));
    for (r, nb) in neighbors.iter().enumerate() {
        let drow = d_interp.row(r);
        if nb[0].dist <= IDW_ZERO_DISTANCE {
            let mut out = d_src.row_mut(nb[0].index);
            out += &drow;
            continue;
        }
        let w_sum: f64 = nb.iter().map(|n| 1.0 / n.dist).sum();
        for n in nb {
            let w = (1.0 / n.dist) / w_sum;
            let mut out = d_src.row_mut(n.index);
            out.scaled_add(w, &drow);
        }
    }
    d_src
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::idw_interpolate;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn cloud(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect()
    }

    fn batch(seed: u64, n: usize, c: usize) -> FeatureBatch {
        let mut rng = rng_from_seed(seed);
        Array2::from_shape_simple_fn((n, c), || rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn interpolated_half_matches_the_geometry_oracle_exactly() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(1);
        let fp = FeaturePropagation::new(&mut ps, &mut rng, "fp", &[7, 5], 3);
        let coarse = cloud(9, 2);
        let cf = batch(3, 9, 4);
        let fine = cloud(25, 4);
        let skip = batch(5, 25, 3);
        let (x, _) = fp.assemble(&coarse, &cf, &fine, &skip);
        for (r, &p) in fine.iter().enumerate() {
            let oracle = idw_interpolate(p, &coarse, cf.view(), 3).unwrap();
            for j in 0..4 {
                assert_eq!(x[[r, j]], oracle[j], "row {r} col {j}");
            }
        }
    }

    #[test]
    fn identical_levels_interpolate_to_identity() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(6);
        let fp = FeaturePropagation::new(&mut ps, &mut rng, "fp", &[6, 4], 3);
        let pts = cloud(10, 7);
        let cf = batch(8, 10, 4);
        let skip = batch(9, 10, 2);
        let (x, _) = fp.assemble(&pts, &cf, &pts, &skip);
        // Every fine point coincides with a coarse point, so the zero-
        // distance rule copies that point's row verbatim.
        for r in 0..10 {
            for j in 0..4 {
                assert_eq!(x[[r, j]], cf[[r, j]]);
            }
        }
    }

    #[test]
    fn single_coarse_point_broadcasts() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(10);
        let fp = FeaturePropagation::new(&mut ps, &mut rng, "fp", &[5, 4], 3);
        let coarse = vec![Point3::new(0.3, 0.1, -0.2)];
        let cf = batch(11, 1, 3);
        let fine = cloud(8, 12);
        let skip = batch(13, 8, 2);
        let (x, nb) = fp.assemble(&coarse, &cf, &fine, &skip);
        assert!(nb.iter().all(|n| n.len() == 1));
        for r in 0..8 {
            for j in 0..3 {
                // One neighbour means weight 1 up to normalization roundoff.
                assert!((x[[r, j]] - cf[[0, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_pass_finite_differences() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(20);
        let fp = FeaturePropagation::new(&mut ps, &mut rng, "fp", &[6, 5, 4], 3);
        let coarse = cloud(7, 21);
        let cf = batch(22, 7, 4);
        let fine = cloud(18, 23);
        let skip = batch(24, 18, 2);

        let run = |ps: &ParamSet| -> f64 {
            let (y, _, _) = fp.forward_train(ps, &coarse, &cf, &fine, &skip).unwrap();
            y.mapv(|v| v * v).sum()
        };

        let (y, cache, _) = fp.forward_train(&ps, &coarse, &cf, &fine, &skip).unwrap();
        let dy = y.mapv(|v| 2.0 * v);
        let mut g = GradStore::new(&ps);
        fp.backward(&ps, &cache, &dy, &mut g);
        g.apply_to(&mut ps);

        let report = crate::nn::grad_check(&mut ps, &run, 5, 25, 1e-5);
        assert!(report.worst_rel < 1e-4, "worst {} at {}", report.worst_rel, report.worst_param);
    }

    #[test]
    fn coarse_and_skip_input_gradients_match_finite_differences() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(30);
        let fp = FeaturePropagation::new(&mut ps, &mut rng, "fp", &[5, 4], 2);
        let coarse = cloud(6, 31);
        let cf = batch(32, 6, 3);
        let fine = cloud(9, 33);
        let skip = batch(34, 9, 2);

        let (y, cache, _) = fp.forward_train(&ps, &coarse, &cf, &fine, &skip).unwrap();
        let dy = y.mapv(|v| 2.0 * v);
        let mut g = GradStore::new(&ps);
        let (d_coarse, d_skip) = fp.backward(&ps, &cache, &dy, &mut g);

        let eps = 1e-5;
        let mut rng = rng_from_seed(35);
        for _ in 0..5 {
            let r = rng.gen_range(0..6);
            let c = rng.gen_range(0..3);
            let mut probe = cf.clone();
            probe[[r, c]] += eps;
            let up = {
                let (y, _, _) = fp.forward_train(&ps, &coarse, &probe, &fine, &skip).unwrap();
                y.mapv(|v| v * v).sum()
            };
            probe[[r, c]] -= 2.0 * eps;
            let down = {
                let (y, _, _) = fp.forward_train(&ps, &coarse, &probe, &fine, &skip).unwrap();
                y.mapv(|v| v * v).sum()
            };
            let numeric = (up - down) / (2.0 * eps);
            assert!(
                crate::nn::relative_error(d_coarse[[r, c]], numeric) < 1e-4,
                "coarse ({r},{c})"
            );
        }
        for _ in 0..5 {
            let r = rng.gen_range(0..9);
            let c = rng.gen_range(0..2);
            let mut probe = skip.clone();
            probe[[r, c]] += eps;
            let up = {
                let (y, _, _) = fp.forward_train(&ps, &coarse, &cf, &fine, &probe).unwrap();
                y.mapv(|v| v * v).sum()
            };
            probe[[r, c]] -= 2.0 * eps;
            let down = {
                let (y, _, _) = fp.forward_train(&ps, &coarse, &cf, &fine, &probe).unwrap();
                y.mapv(|v| v * v).sum()
            };
            let numeric = (up - down) / (2.0 * eps);
            assert!(
                crate::nn::relative_error(d_skip[[r, c]], numeric) < 1e-4,
                "skip ({r},{c})"
            );
        }
    }
}
