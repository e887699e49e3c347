//! Scene and object encoders: a U-shaped stack of set-abstraction stages
//! going down and feature-propagation stages coming back up, with skip links
//! between matching resolutions.
//!
//! Both expect clouds already centered by the caller.  Grouping radii are
//! expressed as fractions of the input cloud's bounding radius, resolved
//! once per forward pass.

use ndarray::Array2;

use super::fp::{FeaturePropagation, FpCache};
use super::sa::{SaCache, SetAbstraction};
use crate::error::Result;
use crate::geometry::Point3;
use crate::nn::{BnStats, FeatureBatch, GradStore, Linear, ParamSet};
use crate::preset::EncoderSpec;
use crate::rng::SeedRng;

fn coords_matrix(points: &[Point3]) -> FeatureBatch {
    let mut m = Array2::zeros((points.len(), 3));
    for (r, p) in points.iter().enumerate() {
        m[[r, 0]] = p.x;
        m[[r, 1]] = p.y;
        m[[r, 2]] = p.z;
    }
    m
}

fn bounding_radius(points: &[Point3]) -> f64 {
    let inv = 1.0 / points.len() as f64;
    let c = points.iter().fold(Point3::ZERO, |acc, &p| acc + p) * inv;
    points.iter().map(|p| p.dist(c)).fold(0.0, f64::max).max(1e-9)
}

/// The shared U-shape: returns the finest propagated features.
struct Trunk {
    sas: Vec<SetAbstraction>,
    fps: Vec<FeaturePropagation>,
}

struct TrunkCache {
    level_sizes: Vec<usize>,
    sa: Vec<SaCache>,
    fp: Vec<FpCache>,
}

struct TrunkOut {
    /// Finest propagated features (one row per input point).
    fine: FeatureBatch,
    /// Output of the coarsest abstraction stage.
    coarsest: FeatureBatch,
}

impl Trunk {
    fn new(ps: &mut ParamSet, rng: &mut SeedRng, name: &str, spec: &EncoderSpec, t: usize) -> Trunk {
        let sas = spec
            .sa
            .iter()
            .enumerate()
            .map(|(i, s)| SetAbstraction::new(ps, rng, &format!("{name}.sa{i}"), s.clone()))
            .collect();
        let fps = spec
            .fp
            .iter()
            .enumerate()
            .map(|(i, plan)| FeaturePropagation::new(ps, rng, &format!("{name}.fp{i}"), plan, t))
            .collect();
        Trunk { sas, fps }
    }

    fn forward_train(
        &self,
        ps: &ParamSet,
        points: &[Point3],
    ) -> Result<(TrunkOut, TrunkCache, Vec<BnStats>)> {
        let bound = bounding_radius(points);
        let coords = coords_matrix(points);
        let mut stats = Vec::new();
        let mut level_pts: Vec<Vec<Point3>> = vec![points.to_vec()];
        let mut level_feat: Vec<FeatureBatch> = Vec::new();
        let mut sa_caches = Vec::new();
        for (i, sa) in self.sas.iter().enumerate() {
            let radius = sa.spec.radius_fraction * bound;
            let feats = if i == 0 { None } else { Some(&level_feat[i - 1]) };
            let (pos, pooled, cache, st) = sa.forward_train(ps, &level_pts[i], feats, radius)?;
            level_pts.push(pos);
            level_feat.push(pooled);
            sa_caches.push(cache);
            stats.extend(st);
        }

        let l = self.sas.len();
        let mut carried = level_feat[l - 1].clone();
        let mut fp_caches = Vec::new();
        for (j, fp) in self.fps.iter().enumerate() {
            let coarse = l - j;
            let fine = l - 1 - j;
            let skip = if fine == 0 { &coords } else { &level_feat[fine - 1] };
            let (y, cache, st) =
                fp.forward_train(ps, &level_pts[coarse], &carried, &level_pts[fine], skip)?;
            carried = y;
            fp_caches.push(cache);
            stats.extend(st);
        }

        let cache = TrunkCache {
            level_sizes: level_pts.iter().map(Vec::len).collect(),
            sa: sa_caches,
            fp: fp_caches,
        };
        let out = TrunkOut { fine: carried, coarsest: level_feat[l - 1].clone() };
        Ok((out, cache, stats))
    }

    fn forward_eval(&self, ps: &ParamSet, points: &[Point3]) -> Result<TrunkOut> {
        let bound = bounding_radius(points);
        let coords = coords_matrix(points);
        let mut level_pts: Vec<Vec<Point3>> = vec![points.to_vec()];
        let mut level_feat: Vec<FeatureBatch> = Vec::new();
        for (i, sa) in self.sas.iter().enumerate() {
            let radius = sa.spec.radius_fraction * bound;
            let feats = if i == 0 { None } else { Some(&level_feat[i - 1]) };
            let (pos, pooled) = sa.forward_eval(ps, &level_pts[i], feats, radius)?;
            level_pts.push(pos);
            level_feat.push(pooled);
        }
        let l = self.sas.len();
        let mut carried = level_feat[l - 1].clone();
        for (j, fp) in self.fps.iter().enumerate() {
            let coarse = l - j;
            let fine = l - 1 - j;
            let skip = if fine == 0 { &coords } else { &level_feat[fine - 1] };
            carried = fp.forward_eval(ps, &level_pts[coarse], &carried, &level_pts[fine], skip);
        }
        Ok(TrunkOut { fine: carried, coarsest: level_feat[l - 1].clone() })
    }

    /// `d_fine` is the gradient on the finest propagated features,
    /// `d_coarsest` an extra gradient on the coarsest abstraction output
    /// (used by the object encoder's global head; zero elsewhere).
    fn backward(
        &self,
        ps: &ParamSet,
        cache: &TrunkCache,
        d_fine: &FeatureBatch,
        d_coarsest: Option<&FeatureBatch>,
        g: &mut GradStore,
    ) {
        let l = self.sas.len();
        let mut d_sa: Vec<FeatureBatch> = (0..l)
            .map(|i| Array2::zeros((cache.level_sizes[i + 1], self.sas[i].out_dim())))
            .collect();
        if let Some(d) = d_coarsest {
            d_sa[l - 1] += d;
        }

        let mut d = d_fine.clone();
        for j in (0..l).rev() {
            let fine = l - 1 - j;
            let (d_coarse, d_skip) = self.fps[j].backward(ps, &cache.fp[j], &d, g);
            if fine >= 1 {
                d_sa[fine - 1] += &d_skip;
            }
            if j == 0 {
                d_sa[l - 1] += &d_coarse;
            } else {
                d = d_coarse;
            }
        }

        for i in (0..l).rev() {
            let d_in = self.sas[i].backward(ps, &cache.sa[i], &d_sa[i], g);
            if i >= 1 {
                d_sa[i - 1] += &d_in.expect("feature stage returns input gradient");
            }
        }
    }

    fn update_running(&self, ps: &mut ParamSet, stats: &[BnStats]) {
        let mut at = 0;
        for sa in &self.sas {
            sa.update_running(ps, &stats[at..at + sa.bn_count()]);
            at += sa.bn_count();
        }
        for fp in &self.fps {
            fp.update_running(ps, &stats[at..at + fp.bn_count()]);
            at += fp.bn_count();
        }
        debug_assert_eq!(at, stats.len());
    }

    fn bn_count(&self) -> usize {
        self.sas.iter().map(SetAbstraction::bn_count).sum::<usize>()
            + self.fps.iter().map(FeaturePropagation::bn_count).sum::<usize>()
    }
}

// ---------------------------------------------------------------------------
// Scene encoder

/// Per-point scene features: U-shaped trunk plus a linear head.
pub struct SceneEncoder {
    trunk: Trunk,
    head: Linear,
}

pub struct SceneCache {
    trunk: TrunkCache,
    head_in: FeatureBatch,
}

impl SceneEncoder {
    pub fn new(
        ps: &mut ParamSet,
        rng: &mut SeedRng,
        name: &str,
        spec: &EncoderSpec,
        t: usize,
        out_feat: usize,
    ) -> SceneEncoder {
        let trunk = Trunk::new(ps, rng, name, spec, t);
        let fine_dim = *spec.fp.last().and_then(|p| p.last()).expect("non-empty plan");
        let head = Linear::new(ps, rng, &format!("{name}.head"), fine_dim, out_feat);
        SceneEncoder { trunk, head }
    }

    pub fn out_dim(&self) -> usize {
        self.head.out_dim
    }

    /// Returns `(per-point n×f1, coarsest abstraction output)`.  The second
    /// matrix feeds variants that want a whole-scene summary.
    pub fn forward_train(
        &self,
        ps: &ParamSet,
        points: &[Point3],
    ) -> Result<(FeatureBatch, FeatureBatch, SceneCache, Vec<BnStats>)> {
        let (out, trunk_cache, stats) = self.trunk.forward_train(ps, points)?;
        let y = self.head.forward(ps, &out.fine);
        Ok((y, out.coarsest, SceneCache { trunk: trunk_cache, head_in: out.fine }, stats))
    }

    pub fn forward_eval(
        &self,
        ps: &ParamSet,
        points: &[Point3],
    ) -> Result<(FeatureBatch, FeatureBatch)> {
        let out = self.trunk.forward_eval(ps, points)?;
        Ok((self.head.forward(ps, &out.fine), out.coarsest))
    }

    pub fn backward(
        &self,
        ps: &ParamSet,
        cache: &SceneCache,
        d_out: &FeatureBatch,
        d_coarsest: Option<&FeatureBatch>,
        g: &mut GradStore,
    ) {
        let d_fine = self.head.backward(ps, &cache.head_in, d_out, g);
        self.trunk.backward(ps, &cache.trunk, &d_fine, d_coarsest, g);
    }

    pub fn update_running(&self, ps: &mut ParamSet, stats: &[BnStats]) {
        self.trunk.update_running(ps, stats);
    }

    pub fn bn_count(&self) -> usize {
        self.trunk.bn_count()
    }
}

// ---------------------------------------------------------------------------
// Object encoder

/// Per-point features plus a pooled global feature for the acting object.
pub struct ObjectEncoder {
    trunk: Trunk,
    point_head: Linear,
    global_head: Linear,
}

pub struct ObjectCache {
    trunk: TrunkCache,
    point_head_in: FeatureBatch,
    global_head_in: FeatureBatch,
}

impl ObjectEncoder {
    pub fn new(
        ps: &mut ParamSet,
        rng: &mut SeedRng,
        name: &str,
        spec: &EncoderSpec,
        t: usize,
        point_feat: usize,
        global_feat: usize,
    ) -> ObjectEncoder {
        assert_eq!(
            spec.sa.last().map(|s| s.resolution),
            Some(1),
            "object encoder ends in a global stage"
        );
        let trunk = Trunk::new(ps, rng, name, spec, t);
        let fine_dim = *spec.fp.last().and_then(|p| p.last()).expect("non-empty plan");
        let global_dim = *spec.sa.last().and_then(|s| s.mlp.last()).expect("non-empty plan");
        let point_head = Linear::new(ps, rng, &format!("{name}.point_head"), fine_dim, point_feat);
        let global_head =
            Linear::new(ps, rng, &format!("{name}.global_head"), global_dim, global_feat);
        ObjectEncoder { trunk, point_head, global_head }
    }

    pub fn point_dim(&self) -> usize {
        self.point_head.out_dim
    }

    pub fn global_dim(&self) -> usize {
        self.global_head.out_dim
    }

    /// Returns `(per-point m×f2, global 1×f_g)`.
    pub fn forward_train(
        &self,
        ps: &ParamSet,
        points: &[Point3],
    ) -> Result<(FeatureBatch, FeatureBatch, ObjectCache, Vec<BnStats>)> {
        let (out, trunk_cache, stats) = self.trunk.forward_train(ps, points)?;
        let per_point = self.point_head.forward(ps, &out.fine);
        let global = self.global_head.forward(ps, &out.coarsest);
        let cache = ObjectCache {
            trunk: trunk_cache,
            point_head_in: out.fine,
            global_head_in: out.coarsest,
        };
        Ok((per_point, global, cache, stats))
    }

    pub fn forward_eval(
        &self,
        ps: &ParamSet,
        points: &[Point3],
    ) -> Result<(FeatureBatch, FeatureBatch)> {
        let out = self.trunk.forward_eval(ps, points)?;
        Ok((self.point_head.forward(ps, &out.fine), self.global_head.forward(ps, &out.coarsest)))
    }

    pub fn backward(
        &self,
        ps: &ParamSet,
        cache: &ObjectCache,
        d_per_point: &FeatureBatch,
        d_global: &FeatureBatch,
        g: &mut GradStore,
    ) {
        let d_fine = self.point_head.backward(ps, &cache.point_head_in, d_per_point, g);
        let d_coarsest = self.global_head.backward(ps, &cache.global_head_in, d_global, g);
        self.trunk.backward(ps, &cache.trunk, &d_fine, Some(&d_coarsest), g);
    }

    pub fn update_running(&self, ps: &mut ParamSet, stats: &[BnStats]) {
        self.trunk.update_running(ps, stats);
    }

    pub fn bn_count(&self) -> usize {
        self.trunk.bn_count()
    }
}
