//! Set abstraction: subsample centroids by furthest-point sampling, group
//! nearby points, run a shared MLP per grouped point and max-pool each group.

use ndarray::Array2;

use crate::error::Result;
use crate::geometry::{furthest_from_centroid, furthest_point_sample, Point3};
use crate::nn::{
    max_pool_segments, max_pool_segments_backward, Activation, BnStats, FeatureBatch, GradStore,
    Mlp, MlpCache, ParamSet,
};
use crate::preset::SaSpec;
use crate::rng::SeedRng;

#[derive(Debug, Clone)]
pub struct SetAbstraction {
    pub spec: SaSpec,
    mlp: Mlp,
}

/// Intermediates needed to reverse one abstraction stage.
pub struct SaCache {
    /// Indices of the chosen centroids, in selection order.
    pub centroids: Vec<usize>,
    /// Group members, flattened (per-centroid runs, nearest first).
    members: Vec<usize>,
    argmax: Vec<Vec<usize>>,
    mlp: MlpCache,
    input_rows: usize,
    input_cols: usize,
    from_coords: bool,
}

impl SetAbstraction {
    pub fn new(ps: &mut ParamSet, rng: &mut SeedRng, name: &str, spec: SaSpec) -> SetAbstraction {
        let mlp = Mlp::new(ps, rng, name, &spec.mlp, true, Activation::Relu, Activation::Relu);
        SetAbstraction { spec, mlp }
    }

    pub fn out_dim(&self) -> usize {
        self.mlp.out_dim()
    }

    pub fn bn_count(&self) -> usize {
        self.mlp.bn_count()
    }

    /// Pick centroids and group members.  `radius` is in world units; a
    /// global stage (`resolution == 1`) pools every point into one group.
    ///
    /// Groups hold the up-to-`cap` nearest in-radius points, nearest first.
    /// A short group is used as-is: padding by repeating the nearest point,
    /// the usual fixed-shape trick, is a no-op under max-pooling.
    fn group(
        &self,
        points: &[Point3],
        radius: f64,
    ) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        if self.spec.resolution == 1 {
            let start = furthest_from_centroid(points);
            let members: Vec<usize> = (0..points.len()).collect();
            let offsets = vec![0, points.len()];
            return Ok((vec![start], members, offsets));
        }
        let start = furthest_from_centroid(points);
        let seeds = furthest_point_sample(points, self.spec.resolution, start)?;

        let r2 = radius * radius;
        let mut members = Vec::with_capacity(self.spec.resolution * self.spec.cap);
        let mut offsets = Vec::with_capacity(self.spec.resolution + 1);
        offsets.push(0);
        let mut hits: Vec<(f64, usize)> = Vec::new();
        for &ci in &seeds.indices {
            let c = points[ci];
            hits.clear();
            for (i, p) in points.iter().enumerate() {
                let d2 = p.dist_sq(c);
                if d2 <= r2 {
                    hits.push((d2, i));
                }
            }
            // The centroid itself sits at distance zero, so never empty.
            hits.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
            hits.truncate(self.spec.cap);
            members.extend(hits.iter().map(|&(_, i)| i));
            offsets.push(members.len());
        }
        Ok((seeds.indices, members, offsets))
    }

    /// Rows fed to the MLP: centered coordinates on the first stage
    /// (`features` is `None`), plain per-point features afterwards.
    fn gather(
        &self,
        points: &[Point3],
        features: Option<&FeatureBatch>,
        centroids: &[usize],
        members: &[usize],
        offsets: &[usize],
    ) -> FeatureBatch {
        match features {
            None => {
                let mut x = Array2::zeros((members.len(), 3));
                for (g, &ci) in centroids.iter().enumerate() {
                    let c = points[ci];
                    for r in offsets[g]..offsets[g + 1] {
                        let p = points[members[r]] - c;
                        x[[r, 0]] = p.x;
                        x[[r, 1]] = p.y;
                        x[[r, 2]] = p.z;
                    }
                }
                x
            }
            Some(f) => {
                let mut x = Array2::zeros((members.len(), f.ncols()));
                for (r, &m) in members.iter().enumerate() {
                    x.row_mut(r).assign(&f.row(m));
                }
                x
            }
        }
    }

    /// Returns the centroid positions, pooled per-centroid features, the
    /// backward cache and the batch statistics of every BN layer passed.
    pub fn forward_train(
        &self,
        ps: &ParamSet,
        points: &[Point3],
        features: Option<&FeatureBatch>,
        radius: f64,
    ) -> Result<(Vec<Point3>, FeatureBatch, SaCache, Vec<BnStats>)> {
        let (centroids, members, offsets) = self.group(points, radius)?;
        let x = self.gather(points, features, &centroids, &members, &offsets);
        let (y, mlp_cache, stats) = self.mlp.forward_train(ps, &x)?;
        let (pooled, argmax) = max_pool_segments(&y, &offsets);
        let positions: Vec<Point3> = centroids.iter().map(|&i| points[i]).collect();
        let cache = SaCache {
            centroids,
            members,
            argmax,
            mlp: mlp_cache,
            input_rows: points.len(),
            input_cols: features.map_or(3, |f| f.ncols()),
            from_coords: features.is_none(),
        };
        Ok((positions, pooled, cache, stats))
    }

    pub fn forward_eval(
        &self,
        ps: &ParamSet,
        points: &[Point3],
        features: Option<&FeatureBatch>,
        radius: f64,
    ) -> Result<(Vec<Point3>, FeatureBatch)> {
        let (centroids, members, offsets) = self.group(points, radius)?;
        let x = self.gather(points, features, &centroids, &members, &offsets);
        let y = self.mlp.forward_eval(ps, &x);
        let (pooled, _) = max_pool_segments(&y, &offsets);
        let positions = centroids.iter().map(|&i| points[i]).collect();
        Ok((positions, pooled))
    }

    /// Backpropagate pooled-feature gradients.  Returns the gradient with
    /// respect to the input features, or `None` for a coordinate stage
    /// (point positions are data, not parameters).
    pub fn backward(
        &self,
        ps: &ParamSet,
        cache: &SaCache,
        d_pooled: &FeatureBatch,
        g: &mut GradStore,
    ) -> Option<FeatureBatch> {
        let dy = max_pool_segments_backward(d_pooled, &cache.argmax, cache.members.len());
        let dx = self.mlp.backward(ps, &cache.mlp, &dy, g);
        if cache.from_coords {
            return None;
        }
        let mut d_feat = Array2::zeros((cache.input_rows, cache.input_cols));
        for (r, &m) in cache.members.iter().enumerate() {
            let mut row = d_feat.row_mut(m);
            row += &dx.row(r);
        }
        Some(d_feat)
    }

    pub fn update_running(&self, ps: &mut ParamSet, stats: &[BnStats]) {
        self.mlp.update_running(ps, stats);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn spec(resolution: usize, mlp: &[usize]) -> SaSpec {
        SaSpec { resolution, radius_fraction: 0.4, cap: 8, mlp: mlp.to_vec() }
    }

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

    #[test]
    fn shapes_follow_the_plan() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(1);
        let sa = SetAbstraction::new(&mut ps, &mut rng, "sa", spec(6, &[3, 8, 8]));
        let pts = cloud(40, 2);
        let (pos, pooled, _, _) = sa.forward_train(&ps, &pts, None, 0.5).unwrap();
        assert_eq!(pos.len(), 6);
        assert_eq!(pooled.dim(), (6, 8));
    }

    #[test]
    fn global_stage_pools_every_point() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(3);
        let sa = SetAbstraction::new(&mut ps, &mut rng, "sa", spec(1, &[5, 7]));
        let pts = cloud(12, 4);
        let feats = Array2::from_shape_simple_fn((12, 5), || rng.gen_range(-1.0..1.0));
        let (pos, pooled, cache, _) = sa.forward_train(&ps, &pts, Some(&feats), 0.01).unwrap();
        assert_eq!(pos.len(), 1);
        assert_eq!(pooled.dim(), (1, 7));
        assert_eq!(cache.members.len(), 12, "radius must not filter a global stage");

        // Same cloud shuffled: the pooled feature must be identical because
        // every point lands in the single group either way.
        let mut order: Vec<usize> = (0..12).collect();
        order.swap(0, 7);
        order.swap(3, 11);
        let pts2: Vec<Point3> = order.iter().map(|&i| pts[i]).collect();
        let mut feats2 = Array2::zeros((12, 5));
        for (r, &i) in order.iter().enumerate() {
            feats2.row_mut(r).assign(&feats.row(i));
        }
        let (_, pooled2, _, _) = sa.forward_train(&ps, &pts2, Some(&feats2), 0.01).unwrap();
        let diff = (&pooled - &pooled2).mapv(f64::abs).sum();
        assert!(diff < 1e-12, "diff {diff}");
    }

    #[test]
    fn group_members_sorted_by_distance_and_capped() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(5);
        let sa = SetAbstraction::new(&mut ps, &mut rng, "sa", spec(3, &[3, 4]));
        let pts = cloud(50, 6);
        let (centroids, members, offsets) = sa.group(&pts, 0.9).unwrap();
        for g in 0..3 {
            let c = pts[centroids[g]];
            let run = &members[offsets[g]..offsets[g + 1]];
            assert!(run.len() <= 8);
            assert!(!run.is_empty());
            assert_eq!(run[0], centroids[g], "nearest member is the centroid itself");
            for w in run.windows(2) {
                assert!(pts[w[0]].dist(c) <= pts[w[1]].dist(c) + 1e-12);
            }
            for &m in run {
                assert!(pts[m].dist(c) <= 0.9 + 1e-12);
            }
        }
    }

    #[test]
    fn feature_stage_gradients_pass_finite_differences() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(7);
        let sa = SetAbstraction::new(&mut ps, &mut rng, "sa", spec(4, &[6, 5]));
        let pts = cloud(20, 8);
        let feats = Array2::from_shape_simple_fn((20, 6), || rng.gen_range(-1.0..1.0));
        let target = Array2::from_shape_simple_fn((4, 5), || rng.gen_range(-1.0..1.0));

        let run = |ps: &ParamSet| -> f64 {
            let (_, pooled, _, _) = sa.forward_train(ps, &pts, Some(&feats), 0.8).unwrap();
            (&pooled - &target).mapv(|d| d * d).sum()
        };

        let (_, pooled, cache, _) = sa.forward_train(&ps, &pts, Some(&feats), 0.8).unwrap();
        let dy = (&pooled - &target).mapv(|d| 2.0 * d);
        let mut g = GradStore::new(&ps);
        let d_feat = sa.backward(&ps, &cache, &dy, &mut g).expect("feature stage");
        assert_eq!(d_feat.dim(), (20, 6));
        g.apply_to(&mut ps);

        let report = crate::nn::grad_check(&mut ps, &run, 5, 13, 1e-5);
        assert!(report.worst_rel < 1e-4, "worst {} at {}", report.worst_rel, report.worst_param);
    }

    #[test]
    fn input_feature_gradient_matches_finite_differences() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(9);
        let sa = SetAbstraction::new(&mut ps, &mut rng, "sa", spec(3, &[4, 4]));
        let pts = cloud(15, 10);
        let feats = Array2::from_shape_simple_fn((15, 4), || rng.gen_range(-1.0..1.0));

        let loss = |f: &FeatureBatch| -> f64 {
            let (_, pooled, _, _) = sa.forward_train(&ps, &pts, Some(f), 0.8).unwrap();
            pooled.mapv(|v| v * v).sum()
        };

        let (_, pooled, cache, _) = sa.forward_train(&ps, &pts, Some(&feats), 0.8).unwrap();
        let dy = pooled.mapv(|v| 2.0 * v);
        let mut g = GradStore::new(&ps);
        let d_feat = sa.backward(&ps, &cache, &dy, &mut g).unwrap();

        let mut rng = rng_from_seed(11);
        for _ in 0..6 {
            let r = rng.gen_range(0..15);
            let c = rng.gen_range(0..4);
            let mut probe = feats.clone();
            let eps = 1e-5;
            probe[[r, c]] += eps;
            let up = loss(&probe);
            probe[[r, c]] -= 2.0 * eps;
            let down = loss(&probe);
            let numeric = (up - down) / (2.0 * eps);
            let analytic = d_feat[[r, c]];
            assert!(
                crate::nn::relative_error(analytic, numeric) < 1e-4,
                "({r},{c}): analytic {analytic}, numeric {numeric}"
            );
        }
    }
}
